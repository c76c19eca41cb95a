use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::als::{train_als, AlsConfig, FactorModel};
use super::interactions::InteractionSet;
use crate::error::{Error, Result};
use crate::rng;
use crate::selection::{evaluate_regression, RegressionMetrics};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub value: f64,
    /// True when the user or item had no training data and the global mean
    /// was returned instead.
    pub cold_start: bool,
}

/// `u . v`, or the global mean when either side is unknown or untrained.
pub fn score(m: &FactorModel, user: usize, item: usize) -> Scored {
    let known = user < m.num_users() && item < m.num_items() && m.user_counts[user] > 0 && m.item_counts[item] > 0;
    if known {
        Scored {
            value: m.user_vec(user).iter().zip(m.item_vec(item)).map(|(a, b)| a * b).sum(),
            cold_start: false,
        }
    } else {
        Scored {
            value: m.global_mean,
            cold_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendations {
    /// `(item index, score)`, best first.
    pub items: Vec<(usize, f64)>,
    /// True when the user was unknown and items are ranked by popularity;
    /// scores are then interaction counts.
    pub cold_start: bool,
}

/// Top `n` items for a user by predicted score, ties to the lower item
/// index. `user = None` (or an untrained user) falls back to popularity.
pub fn recommend_top_n(m: &FactorModel, user: Option<usize>, n: usize, exclude_seen: bool, data: &InteractionSet) -> Result<Recommendations> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let user = user.filter(|u| *u < m.num_users() && m.user_counts[*u] > 0);
    let seen: std::collections::HashSet<u32> = match user {
        Some(u) if exclude_seen => data.triples.iter().filter(|t| t.0 as usize == u).map(|t| t.1).collect(),
        _ => Default::default(),
    };
    let mut ranked: Vec<(usize, f64)> = match user {
        Some(u) => (0..m.num_items())
            .filter(|i| !seen.contains(&(*i as u32)))
            .map(|i| {
                let v: f64 = m.user_vec(u).iter().zip(m.item_vec(i)).map(|(a, b)| a * b).sum();
                (i, v)
            })
            .collect(),
        None => m.item_counts.iter().enumerate().map(|(i, c)| (i, *c as f64)).collect(),
    };
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(n);
    Ok(Recommendations {
        items: ranked,
        cold_start: user.is_none(),
    })
}

/// Holds out one seeded rating per user with at least two ratings.
pub fn holdout_split(data: &InteractionSet, seed: u64) -> (InteractionSet, Vec<(u32, u32, f64)>) {
    let mut r = rng::seeded(seed);
    let mut positions: Vec<Vec<usize>> = vec![Vec::new(); data.num_users()];
    for (k, t) in data.triples.iter().enumerate() {
        positions[t.0 as usize].push(k);
    }
    let mut held = vec![false; data.triples.len()];
    for p in &positions {
        if p.len() >= 2 {
            held[p[r.gen_range(0..p.len())]] = true;
        }
    }
    let mut train = Vec::with_capacity(data.triples.len());
    let mut test = Vec::new();
    for (k, t) in data.triples.iter().enumerate() {
        if held[k] {
            test.push(*t);
        } else {
            train.push(*t);
        }
    }
    (data.with_triples(train), test)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub train_triples: usize,
    pub test_triples: usize,
    pub cold_start_predictions: usize,
    pub metrics: RegressionMetrics,
}

/// Trains on the holdout remainder and scores raw held-out ratings.
pub fn evaluate_holdout(data: &InteractionSet, cfg: &AlsConfig, seed: u64) -> Result<(FactorModel, HoldoutReport)> {
    let (train, test) = holdout_split(data, seed);
    if test.len() < 2 {
        return Err(Error::data("fewer than two users have two or more ratings; nothing to hold out"));
    }
    let model = train_als(&train, cfg)?;
    let scored: Vec<Scored> = test.iter().map(|t| score(&model, t.0 as usize, t.1 as usize)).collect();
    let preds: Vec<f64> = scored.iter().map(|s| s.value).collect();
    let truth: Vec<f64> = test.iter().map(|t| t.2).collect();
    let metrics = evaluate_regression(&preds, &truth)?;
    Ok((
        model,
        HoldoutReport {
            train_triples: train.triples.len(),
            test_triples: test.len(),
            cold_start_predictions: scored.iter().filter(|s| s.cold_start).count(),
            metrics,
        },
    ))
}
