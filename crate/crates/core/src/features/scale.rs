use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{column_stats, Table};

/// Fitted range of a numeric column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMaxState {
    pub min: f64,
    pub max: f64,
}

impl MinMaxState {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min <= max) || !min.is_finite() || !max.is_finite() {
            return Err(Error::invalid(format!("invalid min-max range [{min}, {max}]")));
        }
        Ok(MinMaxState { min, max })
    }

    pub fn transform(&self, x: f64) -> f64 {
        transform_minmax(self, x)
    }
}

pub fn fit_minmax(t: &Table, col: &str) -> Result<MinMaxState> {
    let stats = column_stats(t, col)?;
    match (stats.min, stats.max) {
        (Some(min), Some(max)) => MinMaxState::new(min, max),
        _ => Err(Error::data(format!("column {col:?} has no non-null values"))),
    }
}

/// `(x - min) / (max - min)`, without clamping. A constant fitted column
/// maps everything to 0.5.
pub fn transform_minmax(state: &MinMaxState, x: f64) -> f64 {
    if state.max > state.min {
        (x - state.min) / (state.max - state.min)
    } else {
        0.5
    }
}
