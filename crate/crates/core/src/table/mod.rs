//! Immutable typed columnar tables.

mod csv_io;
mod ops;
mod schema;
pub mod store;

use std::sync::Arc;

pub use self::csv_io::{parse_csv, parse_csv_reader, write_csv, IngestOptions, ParseReport};
pub use self::ops::{column_stats, join_inner, split_random, ColumnStats, JoinOutput};
pub use self::schema::{books_schema, ratings_schema, DType, Field, Schema};
pub use self::store::{load_table, save_table};

use crate::error::{Error, Result};
use crate::vector::FeatureVector;

/// Values of one column; `None` is a null.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Text(Vec<Option<String>>),
    Int64(Vec<Option<i64>>),
    Float64(Vec<Option<f64>>),
    Tokens(Vec<Option<Vec<String>>>),
    Vector(Vec<Option<FeatureVector>>),
}

impl ColumnData {
    pub fn empty(dtype: DType) -> Self {
        match dtype {
            DType::Text => ColumnData::Text(Vec::new()),
            DType::Int64 => ColumnData::Int64(Vec::new()),
            DType::Float64 => ColumnData::Float64(Vec::new()),
            DType::Tokens => ColumnData::Tokens(Vec::new()),
            DType::Vector => ColumnData::Vector(Vec::new()),
        }
    }

    pub fn dtype(&self) -> DType {
        match self {
            ColumnData::Text(_) => DType::Text,
            ColumnData::Int64(_) => DType::Int64,
            ColumnData::Float64(_) => DType::Float64,
            ColumnData::Tokens(_) => DType::Tokens,
            ColumnData::Vector(_) => DType::Vector,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ColumnData::Text(v) => v.len(),
            ColumnData::Int64(v) => v.len(),
            ColumnData::Float64(v) => v.len(),
            ColumnData::Tokens(v) => v.len(),
            ColumnData::Vector(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_null(&self, row: usize) -> bool {
        match self {
            ColumnData::Text(v) => v[row].is_none(),
            ColumnData::Int64(v) => v[row].is_none(),
            ColumnData::Float64(v) => v[row].is_none(),
            ColumnData::Tokens(v) => v[row].is_none(),
            ColumnData::Vector(v) => v[row].is_none(),
        }
    }

    pub fn null_count(&self) -> usize {
        (0..self.len()).filter(|r| self.is_null(*r)).count()
    }

    /// Numeric value of a row as `f64` (null or non-numeric gives `None`).
    pub fn numeric(&self, row: usize) -> Option<f64> {
        match self {
            ColumnData::Int64(v) => v[row].map(|x| x as f64),
            ColumnData::Float64(v) => v[row],
            _ => None,
        }
    }

    /// Gathers the given rows (repeats allowed) into a new column.
    pub fn take(&self, rows: &[usize]) -> ColumnData {
        fn pick<T: Clone>(v: &[T], rows: &[usize]) -> Vec<T> {
            rows.iter().map(|r| v[*r].clone()).collect()
        }
        match self {
            ColumnData::Text(v) => ColumnData::Text(pick(v, rows)),
            ColumnData::Int64(v) => ColumnData::Int64(pick(v, rows)),
            ColumnData::Float64(v) => ColumnData::Float64(pick(v, rows)),
            ColumnData::Tokens(v) => ColumnData::Tokens(pick(v, rows)),
            ColumnData::Vector(v) => ColumnData::Vector(pick(v, rows)),
        }
    }
}

/// A typed, immutable columnar table.
///
/// Columns are reference counted, so deriving a table with an extra column
/// or a row subset never copies or mutates the source.
#[derive(Debug, Clone)]
pub struct Table {
    schema: Schema,
    columns: Vec<Arc<ColumnData>>,
    row_count: usize,
}

impl PartialEq for Table {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema
            && self.row_count == other.row_count
            && self
                .columns
                .iter()
                .zip(&other.columns)
                .all(|(a, b)| Arc::ptr_eq(a, b) || a == b)
    }
}

impl Table {
    pub fn new(schema: Schema, columns: Vec<ColumnData>) -> Result<Self> {
        Self::from_shared(schema, columns.into_iter().map(Arc::new).collect())
    }

    fn from_shared(schema: Schema, columns: Vec<Arc<ColumnData>>) -> Result<Self> {
        if schema.len() != columns.len() {
            return Err(Error::Schema(format!(
                "schema has {} columns but {} arrays were given",
                schema.len(),
                columns.len()
            )));
        }
        let row_count = columns[0].len();
        for (field, col) in schema.fields().iter().zip(&columns) {
            if col.dtype() != field.dtype {
                return Err(Error::ColumnType {
                    column: field.name.clone(),
                    expected: field.dtype.to_string(),
                    actual: col.dtype().to_string(),
                });
            }
            if col.len() != row_count {
                return Err(Error::Schema(format!(
                    "column {:?} has {} rows, expected {row_count}",
                    field.name,
                    col.len()
                )));
            }
            if !field.nullable && col.null_count() > 0 {
                return Err(Error::Schema(format!(
                    "non-nullable column {:?} contains nulls",
                    field.name
                )));
            }
        }
        Ok(Table {
            schema,
            columns,
            row_count,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn column(&self, name: &str) -> Result<&ColumnData> {
        self.schema
            .index_of(name)
            .map(|i| self.columns[i].as_ref())
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn column_at(&self, index: usize) -> &ColumnData {
        &self.columns[index]
    }

    pub fn text(&self, name: &str) -> Result<&[Option<String>]> {
        match self.column(name)? {
            ColumnData::Text(v) => Ok(v),
            other => Err(type_error(name, DType::Text, other.dtype())),
        }
    }

    pub fn int64(&self, name: &str) -> Result<&[Option<i64>]> {
        match self.column(name)? {
            ColumnData::Int64(v) => Ok(v),
            other => Err(type_error(name, DType::Int64, other.dtype())),
        }
    }

    pub fn float64(&self, name: &str) -> Result<&[Option<f64>]> {
        match self.column(name)? {
            ColumnData::Float64(v) => Ok(v),
            other => Err(type_error(name, DType::Float64, other.dtype())),
        }
    }

    pub fn tokens(&self, name: &str) -> Result<&[Option<Vec<String>>]> {
        match self.column(name)? {
            ColumnData::Tokens(v) => Ok(v),
            other => Err(type_error(name, DType::Tokens, other.dtype())),
        }
    }

    pub fn vectors(&self, name: &str) -> Result<&[Option<FeatureVector>]> {
        match self.column(name)? {
            ColumnData::Vector(v) => Ok(v),
            other => Err(type_error(name, DType::Vector, other.dtype())),
        }
    }

    /// Returns a new table with `data` appended (or replacing a column of
    /// the same name).
    pub fn with_column(&self, field: Field, data: ColumnData) -> Result<Table> {
        let mut fields = self.schema.fields().to_vec();
        let mut columns = self.columns.clone();
        match self.schema.index_of(&field.name) {
            Some(i) => {
                fields[i] = field;
                columns[i] = Arc::new(data);
            }
            None => {
                fields.push(field);
                columns.push(Arc::new(data));
            }
        }
        Table::from_shared(Schema::new(fields)?, columns)
    }

    /// Gathers rows by index (repeats allowed, order kept).
    pub fn take(&self, rows: &[usize]) -> Table {
        let columns = self.columns.iter().map(|c| Arc::new(c.take(rows))).collect();
        Table {
            schema: self.schema.clone(),
            columns,
            row_count: rows.len(),
        }
    }

    /// Keeps only the named columns, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Table> {
        let mut fields = Vec::with_capacity(names.len());
        let mut columns = Vec::with_capacity(names.len());
        for name in names {
            let i = self
                .schema
                .index_of(name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
            fields.push(self.schema.fields()[i].clone());
            columns.push(self.columns[i].clone());
        }
        Table::from_shared(Schema::new(fields)?, columns)
    }
}

fn type_error(name: &str, expected: DType, actual: DType) -> Error {
    Error::ColumnType {
        column: name.to_string(),
        expected: expected.to_string(),
        actual: actual.to_string(),
    }
}
