use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{ColumnData, Table};

/// Indexed (user, item, rating) triples with no duplicate pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionSet {
    pub user_ids: Vec<String>,
    pub item_ids: Vec<String>,
    user_index: HashMap<String, u32>,
    item_index: HashMap<String, u32>,
    pub triples: Vec<(u32, u32, f64)>,
}

/// Rows skipped or merged while building an [`InteractionSet`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub rows_in: usize,
    pub dropped_null: usize,
    pub duplicates_replaced: usize,
}

impl InteractionSet {
    /// Builds from external ids; ids are indexed by first appearance and a
    /// repeated (user, item) pair keeps the last rating.
    pub fn from_records<'a>(records: impl IntoIterator<Item = (&'a str, &'a str, f64)>) -> (Self, usize) {
        let mut set = InteractionSet {
            user_ids: vec![],
            item_ids: vec![],
            user_index: HashMap::new(),
            item_index: HashMap::new(),
            triples: vec![],
        };
        let mut pair_at: HashMap<(u32, u32), usize> = HashMap::new();
        let mut duplicates = 0;
        for (u, i, r) in records {
            let u = intern(&mut set.user_index, &mut set.user_ids, u);
            let i = intern(&mut set.item_index, &mut set.item_ids, i);
            match pair_at.get(&(u, i)) {
                Some(&at) => {
                    set.triples[at].2 = r;
                    duplicates += 1;
                }
                None => {
                    pair_at.insert((u, i), set.triples.len());
                    set.triples.push((u, i, r));
                }
            }
        }
        (set, duplicates)
    }

    /// Fixture constructor with ids `u<k>` and `i<k>`.
    pub fn from_indexed(num_users: usize, num_items: usize, triples: &[(u32, u32, f64)]) -> Result<Self> {
        let user_ids: Vec<String> = (0..num_users).map(|u| format!("u{u}")).collect();
        let item_ids: Vec<String> = (0..num_items).map(|i| format!("i{i}")).collect();
        let mut seen = std::collections::HashSet::new();
        for &(u, i, _) in triples {
            if u as usize >= num_users || i as usize >= num_items {
                return Err(Error::invalid(format!("triple ({u}, {i}) out of range")));
            }
            if !seen.insert((u, i)) {
                return Err(Error::invalid(format!("duplicate pair ({u}, {i})")));
            }
        }
        Ok(InteractionSet {
            user_index: user_ids.iter().enumerate().map(|(k, s)| (s.clone(), k as u32)).collect(),
            item_index: item_ids.iter().enumerate().map(|(k, s)| (s.clone(), k as u32)).collect(),
            user_ids,
            item_ids,
            triples: triples.to_vec(),
        })
    }

    /// Same id universe, different triples.
    pub fn with_triples(&self, triples: Vec<(u32, u32, f64)>) -> Self {
        InteractionSet {
            triples,
            ..self.clone()
        }
    }

    pub fn num_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn user(&self, id: &str) -> Option<usize> {
        self.user_index.get(id).map(|u| *u as usize)
    }

    pub fn item(&self, id: &str) -> Option<usize> {
        self.item_index.get(id).map(|i| *i as usize)
    }

    /// Items rated by each user, as `(item, rating)` in triple order.
    pub fn by_user(&self) -> Vec<Vec<(u32, f64)>> {
        let mut out = vec![Vec::new(); self.num_users()];
        for &(u, i, r) in &self.triples {
            out[u as usize].push((i, r));
        }
        out
    }

    pub fn by_item(&self) -> Vec<Vec<(u32, f64)>> {
        let mut out = vec![Vec::new(); self.num_items()];
        for &(u, i, r) in &self.triples {
            out[i as usize].push((u, r));
        }
        out
    }
}

fn intern(index: &mut HashMap<String, u32>, ids: &mut Vec<String>, id: &str) -> u32 {
    if let Some(k) = index.get(id) {
        return *k;
    }
    let k = ids.len() as u32;
    index.insert(id.to_string(), k);
    ids.push(id.to_string());
    k
}

/// Interactions from two text id columns and a numeric rating column.
pub fn build_interactions(t: &Table, user_col: &str, item_col: &str, rating_col: &str) -> Result<(InteractionSet, BuildReport)> {
    let users = t.text(user_col)?;
    let items = t.text(item_col)?;
    let ratings: &ColumnData = t.column(rating_col)?;
    if !ratings.dtype().is_numeric() {
        return Err(Error::ColumnType {
            column: rating_col.to_string(),
            expected: "numeric".into(),
            actual: ratings.dtype().to_string(),
        });
    }
    let mut dropped = 0;
    let mut records = Vec::with_capacity(t.row_count());
    for row in 0..t.row_count() {
        match (&users[row], &items[row], ratings.numeric(row)) {
            (Some(u), Some(i), Some(r)) if r.is_finite() => records.push((u.as_str(), i.as_str(), r)),
            _ => dropped += 1,
        }
    }
    let (set, duplicates) = InteractionSet::from_records(records);
    if set.triples.is_empty() {
        return Err(Error::data("no usable (user, item, rating) rows"));
    }
    Ok((
        set,
        BuildReport {
            rows_in: t.row_count(),
            dropped_null: dropped,
            duplicates_replaced: duplicates,
        },
    ))
}
