use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::split::{search, ColumnIndex, Criterion, GiniCriterion};
use crate::error::{Error, Result};
use crate::linear::argmax;
use crate::rng::Rng;
use crate::vector::FeatureVector;

/// Value stored at a leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafValue {
    /// Class probabilities.
    Distribution(Vec<f64>),
    /// Real-valued score (boosting stages).
    Score(f64),
}

/// Binary split tree. A row goes left iff `x[feature] <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        impurity_gain: f64,
        n_samples: u64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: LeafValue,
        n_samples: u64,
    },
}

impl TreeNode {
    pub fn n_samples(&self) -> u64 {
        match self {
            TreeNode::Internal { n_samples, .. } | TreeNode::Leaf { n_samples, .. } => *n_samples,
        }
    }

    /// The leaf that `x` is routed to.
    pub fn leaf(&self, x: &FeatureVector) -> &LeafValue {
        let mut node = self;
        loop {
            match node {
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if x.get(*feature) <= *threshold { left } else { right },
                TreeNode::Leaf { value, .. } => return value,
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
            TreeNode::Leaf { .. } => 0,
        }
    }

    pub fn num_internal(&self) -> usize {
        match self {
            TreeNode::Internal { left, right, .. } => 1 + left.num_internal() + right.num_internal(),
            TreeNode::Leaf { .. } => 0,
        }
    }

    /// Visits every internal node as `(feature, impurity_gain, n_samples)`.
    pub fn for_each_split(&self, f: &mut impl FnMut(usize, f64, u64)) {
        if let TreeNode::Internal {
            feature,
            impurity_gain,
            n_samples,
            left,
            right,
            ..
        } = self
        {
            f(*feature, *impurity_gain, *n_samples);
            left.for_each_split(f);
            right.for_each_split(f);
        }
    }

    /// Score of a regression leaf (0 for class-distribution leaves).
    pub fn score(&self, x: &FeatureVector) -> f64 {
        match self.leaf(x) {
            LeafValue::Score(s) => *s,
            LeafValue::Distribution(_) => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_instances_per_node: usize,
    pub max_bins: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 5,
            min_instances_per_node: 1,
            max_bins: 32,
        }
    }
}

/// Which features each node may split on.
pub(crate) enum FeatureSampler<'a> {
    All,
    Random { size: usize, rng: &'a mut Rng },
}

impl FeatureSampler<'_> {
    fn draw(&mut self, dim: usize) -> Vec<usize> {
        match self {
            FeatureSampler::Random { size, rng } if *size < dim => {
                let mut f = sample(&mut **rng, dim, *size).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..dim).collect(),
        }
    }
}

/// Recursive greedy tree growth shared by the classification and
/// regression trees.
pub(crate) struct Grower<'a, C: Criterion, L: Fn(&[u32], &C::Stats) -> LeafValue> {
    pub crit: &'a C,
    pub index: &'a ColumnIndex,
    pub cfg: &'a TreeConfig,
    pub sampler: FeatureSampler<'a>,
    pub leaf: L,
    pub mult: Vec<u32>,
    pub side: Vec<u8>,
}

impl<C: Criterion, L: Fn(&[u32], &C::Stats) -> LeafValue> Grower<'_, C, L> {
    pub fn grow(&mut self, samples: &[u32], depth: usize) -> TreeNode {
        let mut stats = self.crit.empty();
        for &r in samples {
            self.crit.add_row(&mut stats, r as usize, 1.0);
        }
        let n = samples.len() as u64;
        let make_leaf = |g: &Self, stats: &C::Stats| TreeNode::Leaf {
            value: (g.leaf)(samples, stats),
            n_samples: n,
        };
        if depth >= self.cfg.max_depth || self.crit.impurity(&stats) <= 0.0 || samples.len() < 2 {
            return make_leaf(self, &stats);
        }

        let features = self.sampler.draw(self.index.dim);
        for &r in samples {
            self.mult[r as usize] += 1;
        }
        let split = search(
            self.crit,
            self.index,
            &self.mult,
            &stats,
            &features,
            self.cfg.max_bins.max(2),
            self.cfg.min_instances_per_node.max(1) as f64,
        );
        let split = match split {
            Some(s) => s,
            None => {
                for &r in samples {
                    self.mult[r as usize] = 0;
                }
                return make_leaf(self, &stats);
            }
        };
        // zeros are implicit in the column index: mark the nonzero rows of
        // the split feature, everything unmarked has value 0
        let zero_goes_right = 0.0 > split.threshold;
        for &(r, v) in self.index.column(split.feature) {
            if self.mult[r as usize] > 0 {
                self.side[r as usize] = if v > split.threshold { 2 } else { 1 };
            }
        }
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for &r in samples {
            let goes_right = match self.side[r as usize] {
                0 => zero_goes_right,
                s => s == 2,
            };
            if goes_right {
                right.push(r);
            } else {
                left.push(r);
            }
        }
        for &r in samples {
            self.mult[r as usize] = 0;
            self.side[r as usize] = 0;
        }
        TreeNode::Internal {
            feature: split.feature,
            threshold: split.threshold,
            impurity_gain: split.gain,
            n_samples: n,
            left: Box::new(self.grow(&left, depth + 1)),
            right: Box::new(self.grow(&right, depth + 1)),
        }
    }
}

pub(crate) fn class_distribution(counts: &[f64]) -> LeafValue {
    let total: f64 = counts.iter().sum();
    LeafValue::Distribution(counts.iter().map(|c| if total > 0.0 { c / total } else { 0.0 }).collect())
}

pub(crate) fn check_labels(rows: &[FeatureVector], labels: &[usize], num_classes: usize) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::invalid("no training rows"));
    }
    if rows.len() != labels.len() {
        return Err(Error::invalid(format!("{} rows but {} labels", rows.len(), labels.len())));
    }
    if let Some(bad) = labels.iter().find(|l| **l >= num_classes) {
        return Err(Error::invalid(format!("label {bad} out of range for {num_classes} classes")));
    }
    Ok(())
}

/// Classification tree from already-indexed rows.
pub(crate) fn grow_classifier(
    index: &ColumnIndex,
    labels: &[usize],
    num_classes: usize,
    samples: &[u32],
    cfg: &TreeConfig,
    sampler: FeatureSampler<'_>,
) -> TreeNode {
    let crit = GiniCriterion { labels, num_classes };
    let mut g = Grower {
        crit: &crit,
        index,
        cfg,
        sampler,
        leaf: |_: &[u32], s: &Vec<f64>| class_distribution(s),
        mult: vec![0; index.rows],
        side: vec![0; index.rows],
    };
    g.grow(samples, 0)
}

/// CART classification tree with Gini impurity.
///
/// Growth stops at `max_depth`, at pure nodes, when no split has a positive
/// gain, or when a split would leave a child with fewer than
/// `min_instances_per_node` rows.
pub fn train_decision_tree(rows: &[FeatureVector], labels: &[usize], num_classes: usize, cfg: &TreeConfig) -> Result<TreeNode> {
    check_labels(rows, labels, num_classes)?;
    let index = ColumnIndex::build(rows)?;
    let samples: Vec<u32> = (0..rows.len() as u32).collect();
    Ok(grow_classifier(&index, labels, num_classes, &samples, cfg, FeatureSampler::All))
}

/// Label (argmax of the leaf distribution, lowest class on ties) and the
/// distribution itself.
pub fn predict_tree(root: &TreeNode, x: &FeatureVector) -> (usize, Vec<f64>) {
    match root.leaf(x) {
        LeafValue::Distribution(d) => (argmax(d), d.clone()),
        LeafValue::Score(s) => (usize::from(*s > 0.0), vec![]),
    }
}
