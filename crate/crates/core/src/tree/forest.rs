use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cart::{check_labels, grow_classifier, predict_tree, FeatureSampler, TreeConfig, TreeNode};
use super::split::ColumnIndex;
use crate::error::{Error, Result};
use crate::rng;
use crate::vector::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub num_trees: usize,
    pub max_depth: usize,
    /// Features considered per node; `None` means `ceil(sqrt(dim))`.
    pub feature_subset_size: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
    pub min_instances_per_node: usize,
    pub max_bins: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            num_trees: 20,
            max_depth: 5,
            feature_subset_size: None,
            bootstrap: true,
            seed: 0,
            min_instances_per_node: 1,
            max_bins: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    pub num_classes: usize,
    pub seed: u64,
}

/// Bagged classification trees with per-node feature subsampling.
///
/// Tree `i` draws its bootstrap sample and feature subsets from a stream
/// derived from `(seed, i)`, so trees can be grown in parallel and still
/// match a sequential run.
pub fn train_random_forest(rows: &[FeatureVector], labels: &[usize], num_classes: usize, cfg: &ForestConfig) -> Result<ForestModel> {
    check_labels(rows, labels, num_classes)?;
    if cfg.num_trees == 0 {
        return Err(Error::invalid("a forest needs at least one tree"));
    }
    let index = ColumnIndex::build(rows)?;
    let dim = index.dim;
    let subset = cfg
        .feature_subset_size
        .unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize);
    if subset == 0 || subset > dim {
        return Err(Error::invalid(format!(
            "feature subset size {subset} must lie in 1..={dim}"
        )));
    }
    let tree_cfg = TreeConfig {
        max_depth: cfg.max_depth,
        min_instances_per_node: cfg.min_instances_per_node,
        max_bins: cfg.max_bins,
    };
    let n = rows.len();
    let trees = (0..cfg.num_trees)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::derived(cfg.seed, t as u64);
            let samples: Vec<u32> = if cfg.bootstrap {
                let mut s: Vec<u32> = (0..n).map(|_| r.gen_range(0..n as u32)).collect();
                s.sort_unstable();
                s
            } else {
                (0..n as u32).collect()
            };
            let sampler = FeatureSampler::Random {
                size: subset,
                rng: &mut r,
            };
            grow_classifier(&index, labels, num_classes, &samples, &tree_cfg, sampler)
        })
        .collect();
    Ok(ForestModel {
        trees,
        num_classes,
        seed: cfg.seed,
    })
}

/// Majority vote over tree labels; ties go to the lower class.
pub fn predict_forest(f: &ForestModel, x: &FeatureVector) -> usize {
    let mut votes = vec![0usize; f.num_classes.max(1)];
    for t in &f.trees {
        let (label, _) = predict_tree(t, x);
        if label < votes.len() {
            votes[label] += 1;
        }
    }
    let mut best = 0;
    for (c, v) in votes.iter().enumerate() {
        if *v > votes[best] {
            best = c;
        }
    }
    best
}
