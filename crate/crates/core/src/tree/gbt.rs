use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cart::{FeatureSampler, Grower, LeafValue, TreeConfig, TreeNode};
use super::split::{ColumnIndex, Moments, VarianceCriterion};
use crate::error::{Error, Result};
use crate::vector::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtConfig {
    pub num_iters: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_instances_per_node: usize,
    pub max_bins: usize,
}

impl Default for GbtConfig {
    fn default() -> Self {
        GbtConfig {
            num_iters: 20,
            learning_rate: 0.1,
            max_depth: 5,
            min_instances_per_node: 1,
            max_bins: 32,
        }
    }
}

/// Boosted binary classifier: `score = initial_score + lr * sum tree(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub initial_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<TreeNode>,
    /// Mean training log-loss before the first stage and after each stage.
    #[serde(default)]
    pub train_loss: Vec<f64>,
}

impl GbtModel {
    pub fn raw_score(&self, x: &FeatureVector) -> f64 {
        self.initial_score + self.learning_rate * self.trees.iter().map(|t| t.score(x)).sum::<f64>()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean log-loss of labels under raw scores, computed stably.
pub fn log_loss(scores: &[f64], y: &[usize]) -> f64 {
    let total: f64 = scores
        .iter()
        .zip(y)
        .map(|(s, &yi)| {
            // -log sigmoid(m) = softplus(-m)
            let m = if yi == 1 { *s } else { -*s };
            softplus(-m)
        })
        .sum();
    total / scores.len() as f64
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Stagewise boosting on the logistic loss.
///
/// Each stage fits a variance-criterion regression tree to the pseudo
/// residuals `y - sigmoid(score)`; every leaf then takes one Newton step
/// `sum(r) / sum(p (1 - p))` over its rows.
pub fn train_gbt(rows: &[FeatureVector], y: &[usize], cfg: &GbtConfig) -> Result<GbtModel> {
    if rows.is_empty() || rows.len() != y.len() {
        return Err(Error::invalid("rows and labels must be non-empty and of equal length"));
    }
    if let Some(bad) = y.iter().find(|l| **l > 1) {
        return Err(Error::invalid(format!("boosting needs binary labels, found {bad}")));
    }
    let positives = y.iter().filter(|l| **l == 1).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::data("boosting needs both classes present"));
    }
    if !(cfg.learning_rate > 0.0) {
        return Err(Error::invalid("learning_rate must be positive"));
    }
    let index = ColumnIndex::build(rows)?;
    let base = positives as f64 / y.len() as f64;
    let initial_score = (base / (1.0 - base)).ln();
    let tree_cfg = TreeConfig {
        max_depth: cfg.max_depth,
        min_instances_per_node: cfg.min_instances_per_node,
        max_bins: cfg.max_bins,
    };

    let n = rows.len();
    let mut scores = vec![initial_score; n];
    let mut train_loss = vec![log_loss(&scores, y)];
    let mut trees = Vec::with_capacity(cfg.num_iters);
    let samples: Vec<u32> = (0..n as u32).collect();
    let mut residuals = vec![0.0; n];
    let mut hess = vec![0.0; n];

    for _ in 0..cfg.num_iters {
        for i in 0..n {
            let p = sigmoid(scores[i]);
            residuals[i] = y[i] as f64 - p;
            hess[i] = p * (1.0 - p);
        }
        let crit = VarianceCriterion { targets: &residuals };
        let (res, h) = (&residuals, &hess);
        let leaf = |members: &[u32], _: &Moments| {
            let num: f64 = members.iter().map(|r| res[*r as usize]).sum();
            let den: f64 = members.iter().map(|r| h[*r as usize]).sum();
            LeafValue::Score(if den > 0.0 { num / den } else { 0.0 })
        };
        let mut grower = Grower {
            crit: &crit,
            index: &index,
            cfg: &tree_cfg,
            sampler: FeatureSampler::All,
            leaf,
            mult: vec![0; n],
            side: vec![0; n],
        };
        let tree = grower.grow(&samples, 0);
        let lr = cfg.learning_rate;
        scores
            .par_iter_mut()
            .zip(rows.par_iter())
            .for_each(|(s, x)| *s += lr * tree.score(x));
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::numeric("boosting scores became non-finite"));
        }
        train_loss.push(log_loss(&scores, y));
        trees.push(tree);
    }

    Ok(GbtModel {
        initial_score,
        learning_rate: cfg.learning_rate,
        trees,
        train_loss,
    })
}

/// Label 1 iff the raw score is strictly positive; probability is
/// `sigmoid(score)`.
pub fn predict_gbt(m: &GbtModel, x: &FeatureVector) -> (usize, f64) {
    let s = m.raw_score(x);
    (usize::from(s > 0.0), sigmoid(s))
}
