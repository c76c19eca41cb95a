use serde::{Deserialize, Serialize};

use super::cart::TreeNode;
use super::forest::ForestModel;
use super::gbt::GbtModel;
use crate::features::BlockMap;

/// Any fitted tree-family model.
#[derive(Debug, Clone, Copy)]
pub enum TreeModelRef<'a> {
    Tree(&'a TreeNode),
    Forest(&'a ForestModel),
    Gbt(&'a GbtModel),
}

impl<'a> TreeModelRef<'a> {
    fn trees(&self) -> &'a [TreeNode] {
        match *self {
            TreeModelRef::Tree(t) => std::slice::from_ref(t),
            TreeModelRef::Forest(f) => &f.trees,
            TreeModelRef::Gbt(g) => &g.trees,
        }
    }
}

/// Per-block importances, in block-map order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importances {
    pub blocks: Vec<(String, f64)>,
    /// True when the model has no splits; every entry is then 0.
    pub degenerate: bool,
}

impl Importances {
    /// Blocks sorted by descending importance (stable for ties).
    pub fn ranked(&self) -> Vec<(String, f64)> {
        let mut out = self.blocks.clone();
        out.sort_by(|a, b| b.1.total_cmp(&a.1));
        out
    }
}

/// Unnormalized per-feature importance: each split adds
/// `n_samples / root_samples * impurity_gain` to its feature.
pub fn raw_feature_importances(trees: &[TreeNode], dim: usize) -> Vec<f64> {
    let mut imp = vec![0.0; dim];
    for t in trees {
        let total = t.n_samples().max(1) as f64;
        t.for_each_split(&mut |f, gain, n| {
            if f < dim {
                imp[f] += n as f64 / total * gain.max(0.0);
            }
        });
    }
    imp
}

/// Feature importances summed within each block and normalized to sum to 1.
pub fn feature_importances(model: TreeModelRef<'_>, blocks: &BlockMap) -> Importances {
    let per_feature = raw_feature_importances(model.trees(), blocks.dim());
    let mut sums = vec![0.0; blocks.blocks.len()];
    for (b, block) in blocks.blocks.iter().enumerate() {
        sums[b] = per_feature[block.offset..block.offset + block.len].iter().sum();
    }
    let total: f64 = sums.iter().sum();
    let degenerate = !(total > 0.0);
    if !degenerate {
        for s in &mut sums {
            *s /= total;
        }
    }
    Importances {
        blocks: blocks.blocks.iter().map(|b| b.name.clone()).zip(sums).collect(),
        degenerate,
    }
}
