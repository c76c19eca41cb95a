use std::collections::HashMap;

use rand::Rng as _;

use super::{ColumnData, Field, Schema, Table};
use crate::error::{Error, Result};
use crate::rng;

/// Output of [`join_inner`].
#[derive(Debug, Clone)]
pub struct JoinOutput {
    pub table: Table,
    /// Right-side columns renamed to avoid a collision: `(original, new)`.
    pub renamed: Vec<(String, String)>,
}

const COLLISION_SUFFIX: &str = "_r";

/// Hash inner join on exact equality of two text key columns.
///
/// Output columns are the left columns followed by the right non-key
/// columns. Rows follow left row order; several right matches for one left
/// row appear in right row order. Null keys never match.
pub fn join_inner(left: &Table, right: &Table, left_key: &str, right_key: &str) -> Result<JoinOutput> {
    let lkeys = left.text(left_key)?;
    let rkeys = right.text(right_key)?;

    let mut index: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, k) in rkeys.iter().enumerate() {
        if let Some(k) = k {
            index.entry(k.as_str()).or_default().push(i);
        }
    }

    let mut lrows = Vec::new();
    let mut rrows = Vec::new();
    for (i, k) in lkeys.iter().enumerate() {
        if let Some(matches) = k.as_ref().and_then(|k| index.get(k.as_str())) {
            for &j in matches {
                lrows.push(i);
                rrows.push(j);
            }
        }
    }

    let mut fields: Vec<Field> = left.schema().fields().to_vec();
    let mut columns: Vec<ColumnData> = (0..left.schema().len())
        .map(|c| left.column_at(c).take(&lrows))
        .collect();
    let mut renamed = Vec::new();
    let rkey_index = right.schema().index_of(right_key).expect("checked above");
    for (c, field) in right.schema().fields().iter().enumerate() {
        if c == rkey_index {
            continue;
        }
        let mut field = field.clone();
        if fields.iter().any(|f| f.name == field.name) {
            let new_name = format!("{}{COLLISION_SUFFIX}", field.name);
            if fields.iter().any(|f| f.name == new_name)
                || right.schema().index_of(&new_name).is_some()
            {
                return Err(Error::Schema(format!(
                    "join output would contain duplicate column {new_name:?}"
                )));
            }
            renamed.push((field.name.clone(), new_name.clone()));
            field.name = new_name;
        }
        fields.push(field);
        columns.push(right.column_at(c).take(&rrows));
    }
    Ok(JoinOutput {
        table: Table::new(Schema::new(fields)?, columns)?,
        renamed,
    })
}

/// Seeded random partition into `(train, rest)`.
///
/// Every row is assigned independently with probability `train_fraction`
/// to the first output; row order is preserved within each side.
pub fn split_random(t: &Table, train_fraction: f64, seed: u64) -> Result<(Table, Table)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction {train_fraction} must lie strictly between 0 and 1"
        )));
    }
    if t.row_count() < 2 {
        return Err(Error::invalid("split needs at least two rows"));
    }
    let (a, b) = split_indices(t.row_count(), train_fraction, seed);
    Ok((t.take(&a), t.take(&b)))
}

pub(crate) fn split_indices(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = rng::seeded(seed);
    let mut a = Vec::with_capacity((n as f64 * train_fraction) as usize + 1);
    let mut b = Vec::new();
    for i in 0..n {
        if rng.gen::<f64>() < train_fraction {
            a.push(i);
        } else {
            b.push(i);
        }
    }
    (a, b)
}

/// Summary of the non-null values of a numeric column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    pub non_null_count: usize,
}

pub fn column_stats(t: &Table, col: &str) -> Result<ColumnStats> {
    let data = t.column(col)?;
    if !data.dtype().is_numeric() {
        return Err(Error::ColumnType {
            column: col.to_string(),
            expected: "numeric".into(),
            actual: data.dtype().to_string(),
        });
    }
    let mut stats = ColumnStats {
        min: None,
        max: None,
        mean: None,
        non_null_count: 0,
    };
    let mut sum = 0.0;
    for r in 0..data.len() {
        if let Some(v) = data.numeric(r) {
            stats.min = Some(stats.min.map_or(v, |m| m.min(v)));
            stats.max = Some(stats.max.map_or(v, |m| m.max(v)));
            sum += v;
            stats.non_null_count += 1;
        }
    }
    if stats.non_null_count > 0 {
        stats.mean = Some(sum / stats.non_null_count as f64);
    }
    Ok(stats)
}
