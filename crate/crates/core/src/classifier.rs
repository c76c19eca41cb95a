//! One interface over every classifier family, for tuning and persistence.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::{train_linear_svc, train_logistic, LinearModel, TrainConfig};
use crate::selection::{LabeledSet, ParamGrid, ParamMap, ParamValue, Trainer};
use crate::tree::{
    feature_importances, predict_forest, predict_gbt, predict_tree, train_decision_tree, train_gbt, train_random_forest, ForestConfig,
    ForestModel, GbtConfig, GbtModel, Importances, TreeConfig, TreeModelRef, TreeNode,
};
use crate::features::BlockMap;
use crate::vector::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    Svc,
    Dtree,
    Rforest,
    Gbt,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [ModelKind::Logistic, ModelKind::Svc, ModelKind::Dtree, ModelKind::Rforest, ModelKind::Gbt];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::Svc => "svc",
            ModelKind::Dtree => "dtree",
            ModelKind::Rforest => "rforest",
            ModelKind::Gbt => "gbt",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Logistic => "Logistic Regression",
            ModelKind::Svc => "Linear SVC",
            ModelKind::Dtree => "Decision Tree",
            ModelKind::Rforest => "Random Forest",
            ModelKind::Gbt => "GBT Classifier",
        }
    }

    pub fn binary_only(self) -> bool {
        matches!(self, ModelKind::Svc | ModelKind::Gbt)
    }

    pub fn is_tree_family(self) -> bool {
        matches!(self, ModelKind::Dtree | ModelKind::Rforest | ModelKind::Gbt)
    }

    /// Grid searched when the configuration does not override it.
    pub fn default_grid(self) -> ParamGrid {
        let g = ParamGrid::new();
        match self {
            ModelKind::Logistic | ModelKind::Svc => g
                .axis("l2_reg", vec![0.0.into(), 0.01.into(), 0.1.into()])
                .axis("max_iters", vec![100.into(), 300.into()]),
            ModelKind::Dtree => g.axis("max_depth", vec![3.into(), 5.into(), 8.into()]),
            ModelKind::Rforest => g.axis("num_trees", vec![10.into(), 20.into()]).axis("max_depth", vec![5.into(), 8.into()]),
            ModelKind::Gbt => g.axis("num_iters", vec![10.into(), 20.into()]).axis("max_depth", vec![3.into(), 5.into()]),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown classifier '{s}'")))
    }
}

/// A fitted classifier of any family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "model", rename_all = "snake_case")]
pub enum Classifier {
    Linear(LinearModel),
    Tree { root: TreeNode, num_classes: usize },
    Forest(ForestModel),
    Gbt(GbtModel),
}

impl Classifier {
    pub fn predict(&self, x: &FeatureVector) -> Result<usize> {
        match self {
            Classifier::Linear(m) => m.predict(x),
            Classifier::Tree { root, .. } => Ok(predict_tree(root, x).0),
            Classifier::Forest(f) => Ok(predict_forest(f, x)),
            Classifier::Gbt(g) => Ok(predict_gbt(g, x).0),
        }
    }

    pub fn importances(&self, blocks: &BlockMap) -> Option<Importances> {
        let model = match self {
            Classifier::Linear(_) => return None,
            Classifier::Tree { root, .. } => TreeModelRef::Tree(root),
            Classifier::Forest(f) => TreeModelRef::Forest(f),
            Classifier::Gbt(g) => TreeModelRef::Gbt(g),
        };
        Some(feature_importances(model, blocks))
    }
}

/// Trains one model family; grid parameters override the base settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierTrainer {
    pub kind: ModelKind,
    pub seed: u64,
}

fn usize_param(name: &str, v: &ParamValue) -> Result<usize> {
    v.as_usize()
        .ok_or_else(|| Error::invalid(format!("parameter '{name}' must be a nonnegative integer, got {v}")))
}

fn f64_param(name: &str, v: &ParamValue) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::invalid(format!("parameter '{name}' must be numeric, got {v}")))
}

fn unknown(kind: ModelKind, name: &str) -> Error {
    Error::invalid(format!("parameter '{name}' does not apply to {kind}"))
}

impl ClassifierTrainer {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        ClassifierTrainer { kind, seed }
    }

    pub fn linear_config(&self, params: &ParamMap) -> Result<TrainConfig> {
        let mut c = TrainConfig {
            seed: self.seed,
            ..TrainConfig::default()
        };
        for (k, v) in params {
            match k.as_str() {
                "max_iters" => c.max_iters = usize_param(k, v)?,
                "step_size" => c.step_size = f64_param(k, v)?,
                "l2_reg" => c.l2_reg = f64_param(k, v)?,
                "tol" => c.tol = f64_param(k, v)?,
                _ => return Err(unknown(self.kind, k)),
            }
        }
        Ok(c)
    }

    fn tree_param(&self, c: &mut TreeConfig, k: &str, v: &ParamValue) -> Result<bool> {
        match k {
            "max_depth" => c.max_depth = usize_param(k, v)?,
            "max_bins" => c.max_bins = usize_param(k, v)?,
            "min_instances_per_node" => c.min_instances_per_node = usize_param(k, v)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn tree_config(&self, params: &ParamMap) -> Result<TreeConfig> {
        let mut c = TreeConfig::default();
        for (k, v) in params {
            if !self.tree_param(&mut c, k, v)? {
                return Err(unknown(self.kind, k));
            }
        }
        Ok(c)
    }

    pub fn forest_config(&self, params: &ParamMap) -> Result<ForestConfig> {
        let mut c = ForestConfig {
            seed: self.seed,
            ..ForestConfig::default()
        };
        let mut t = TreeConfig {
            max_depth: c.max_depth,
            min_instances_per_node: c.min_instances_per_node,
            max_bins: c.max_bins,
        };
        for (k, v) in params {
            if self.tree_param(&mut t, k, v)? {
                continue;
            }
            match k.as_str() {
                "num_trees" => c.num_trees = usize_param(k, v)?,
                "feature_subset_size" => c.feature_subset_size = Some(usize_param(k, v)?),
                "bootstrap" => {
                    c.bootstrap = v
                        .as_bool()
                        .ok_or_else(|| Error::invalid("parameter 'bootstrap' must be a boolean"))?
                }
                _ => return Err(unknown(self.kind, k)),
            }
        }
        c.max_depth = t.max_depth;
        c.min_instances_per_node = t.min_instances_per_node;
        c.max_bins = t.max_bins;
        Ok(c)
    }

    pub fn gbt_config(&self, params: &ParamMap) -> Result<GbtConfig> {
        let mut c = GbtConfig::default();
        let mut t = TreeConfig {
            max_depth: c.max_depth,
            min_instances_per_node: c.min_instances_per_node,
            max_bins: c.max_bins,
        };
        for (k, v) in params {
            if self.tree_param(&mut t, k, v)? {
                continue;
            }
            match k.as_str() {
                "num_iters" => c.num_iters = usize_param(k, v)?,
                "learning_rate" => c.learning_rate = f64_param(k, v)?,
                _ => return Err(unknown(self.kind, k)),
            }
        }
        c.max_depth = t.max_depth;
        c.min_instances_per_node = t.min_instances_per_node;
        c.max_bins = t.max_bins;
        Ok(c)
    }
}

impl Trainer for ClassifierTrainer {
    type Model = Classifier;

    fn fit(&self, params: &ParamMap, data: &LabeledSet) -> Result<Classifier> {
        if self.kind.binary_only() && data.num_classes != 2 {
            return Err(Error::invalid(format!("{} supports binary labels only", self.kind)));
        }
        let (x, y, k) = (&data.x, &data.y, data.num_classes);
        Ok(match self.kind {
            ModelKind::Logistic => Classifier::Linear(train_logistic(x, y, k, &self.linear_config(params)?)?),
            ModelKind::Svc => Classifier::Linear(train_linear_svc(x, y, &self.linear_config(params)?)?),
            ModelKind::Dtree => Classifier::Tree {
                root: train_decision_tree(x, y, k, &self.tree_config(params)?)?,
                num_classes: k,
            },
            ModelKind::Rforest => Classifier::Forest(train_random_forest(x, y, k, &self.forest_config(params)?)?),
            ModelKind::Gbt => Classifier::Gbt(train_gbt(x, y, &self.gbt_config(params)?)?),
        })
    }

    fn predict(&self, model: &Classifier, x: &FeatureVector) -> Result<usize> {
        model.predict(x)
    }
}
