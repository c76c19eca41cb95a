use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column value type.
///
/// `Text`, `Int64` and `Float64` are the ingestion types. `Tokens` and
/// `Vector` only appear in columns added by feature stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DType {
    Text,
    Int64,
    Float64,
    Tokens,
    Vector,
}

impl DType {
    pub fn is_numeric(self) -> bool {
        matches!(self, DType::Int64 | DType::Float64)
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DType::Text => "text",
            DType::Int64 => "int64",
            DType::Float64 => "float64",
            DType::Tokens => "tokens",
            DType::Vector => "vector",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    pub dtype: DType,
    pub nullable: bool,
    /// Alternative header spellings accepted at ingestion (matched
    /// case-insensitively, like `name`).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
}

impl Field {
    pub fn new(name: impl Into<String>, dtype: DType, nullable: bool) -> Self {
        Field {
            name: name.into(),
            dtype,
            nullable,
            aliases: Vec::new(),
        }
    }

    pub fn with_aliases(mut self, aliases: &[&str]) -> Self {
        self.aliases = aliases.iter().map(|s| s.to_string()).collect();
        self
    }

    pub(crate) fn matches_header(&self, header: &str) -> bool {
        let h = header.trim();
        self.name.eq_ignore_ascii_case(h) || self.aliases.iter().any(|a| a.eq_ignore_ascii_case(h))
    }
}

/// Ordered, uniquely named column list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    fields: Vec<Field>,
}

impl Schema {
    pub fn new(fields: Vec<Field>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::Schema("schema needs at least one column".into()));
        }
        let mut seen = HashSet::new();
        for f in &fields {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name {:?}", f.name)));
            }
        }
        Ok(Schema { fields })
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn field(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.fields.iter().map(|f| f.name.as_str())
    }
}

/// Schema of `books_data.csv`.
pub fn books_schema() -> Schema {
    use DType::*;
    Schema::new(vec![
        Field::new("title", Text, true),
        Field::new("description", Text, true),
        Field::new("authors", Text, true),
        Field::new("image", Text, true),
        Field::new("preview", Text, true).with_aliases(&["previewLink"]),
        Field::new("publisher", Text, true),
        Field::new("publish_date", Int64, true).with_aliases(&["publishedDate"]),
        Field::new("info_link", Text, true).with_aliases(&["infoLink"]),
        Field::new("categories", Text, true),
        Field::new("ratings_count", Int64, true).with_aliases(&["ratingsCount"]),
    ])
    .expect("static schema")
}

/// Schema of `Books_rating.csv`.
pub fn ratings_schema() -> Schema {
    use DType::*;
    Schema::new(vec![
        Field::new("id", Int64, true),
        Field::new("title", Text, true),
        Field::new("price", Text, true),
        Field::new("user_id", Text, true),
        Field::new("profile_name", Text, true).with_aliases(&["profileName"]),
        Field::new("r_helpfulness", Text, true).with_aliases(&["review/helpfulness"]),
        Field::new("r_score", Int64, true).with_aliases(&["review/score"]),
        Field::new("r_time", Int64, true).with_aliases(&["review/time"]),
        Field::new("r_summary", Text, true).with_aliases(&["review/summary"]),
        Field::new("r_review", Text, true).with_aliases(&["review/text"]),
    ])
    .expect("static schema")
}
