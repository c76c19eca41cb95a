use crate::error::{Error, Result};

/// Maps a 1–5 star rating to the binary target: 1–3 → 0, 4–5 → 1.
pub fn binarize_label(score: i64) -> Result<usize> {
    match score {
        1..=3 => Ok(0),
        4 | 5 => Ok(1),
        other => Err(Error::invalid(format!("rating {other} outside 1..=5"))),
    }
}

/// Maps a 1–5 star rating to a 0-based class index for the 5-class task.
pub fn multiclass_label(score: i64) -> Result<usize> {
    match score {
        1..=5 => Ok((score - 1) as usize),
        other => Err(Error::invalid(format!("rating {other} outside 1..=5"))),
    }
}
