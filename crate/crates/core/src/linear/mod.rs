//! Linear classifiers: multinomial logistic regression and linear SVC.
//!
//! Both are trained full-batch and deterministically. Row reductions run in
//! parallel over fixed-size chunks that are summed in chunk order, so the
//! result does not depend on the thread count.

mod logistic;
mod svc;

pub(crate) use self::logistic::argmax;
pub use self::logistic::{logistic_objective, predict_logistic, softmax, train_logistic};
pub use self::svc::{hinge_objective, predict_svc, train_linear_svc};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::FeatureVector;

pub(crate) const CHUNK_ROWS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearKind {
    Logistic,
    Svc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_iters: usize,
    pub step_size: f64,
    pub l2_reg: f64,
    pub tol: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_iters: 100,
            step_size: 1.0,
            l2_reg: 0.01,
            tol: 1e-6,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        if !(self.step_size > 0.0) || !(self.tol > 0.0) || !(self.l2_reg >= 0.0) {
            return Err(Error::invalid("step_size and tol must be positive, l2_reg nonnegative"));
        }
        Ok(())
    }
}

/// Training metadata stored with a fitted model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainInfo {
    pub iterations: usize,
    pub final_objective: f64,
    /// Objective after each accepted step, starting with the initial model.
    #[serde(default)]
    pub objective_trace: Vec<f64>,
}

/// A fitted linear classifier.
///
/// Logistic models keep one weight row per class; SVC models keep a single
/// row for the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub kind: LinearKind,
    pub num_classes: usize,
    pub dimension: usize,
    pub weights: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
    #[serde(default)]
    pub info: TrainInfo,
}

impl LinearModel {
    pub fn zeros(kind: LinearKind, num_classes: usize, dimension: usize) -> Self {
        let rows = match kind {
            LinearKind::Logistic => num_classes,
            LinearKind::Svc => 1,
        };
        LinearModel {
            kind,
            num_classes,
            dimension,
            weights: vec![vec![0.0; dimension]; rows],
            intercepts: vec![0.0; rows],
            info: TrainInfo::default(),
        }
    }

    /// Raw scores `w_k · x + b_k`, one per weight row.
    pub fn scores(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        check_dim(self.dimension, x)?;
        Ok(self
            .weights
            .iter()
            .zip(&self.intercepts)
            .map(|(w, b)| x.dot(w) + b)
            .collect())
    }

    /// Predicted class for either kind.
    pub fn predict(&self, x: &FeatureVector) -> Result<usize> {
        match self.kind {
            LinearKind::Logistic => predict_logistic(self, x).map(|p| p.0),
            LinearKind::Svc => predict_svc(self, x).map(|p| p.0),
        }
    }

    fn flat_len(&self) -> usize {
        self.weights.len() * (self.dimension + 1)
    }

    /// Parameters as `[w_0 .. w_{K-1}, b]`.
    fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        for w in &self.weights {
            out.extend_from_slice(w);
        }
        out.extend_from_slice(&self.intercepts);
        out
    }

    fn set_flat(&mut self, flat: &[f64]) {
        let d = self.dimension;
        for (k, w) in self.weights.iter_mut().enumerate() {
            w.copy_from_slice(&flat[k * d..(k + 1) * d]);
        }
        let rows = self.weights.len();
        self.intercepts.copy_from_slice(&flat[rows * d..rows * d + rows]);
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().flatten().chain(&self.intercepts).all(|v| v.is_finite())
    }
}

/// Gradient with the same shape as a model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradient {
    pub weights: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
}

impl ParamGradient {
    fn from_flat(flat: &[f64], rows: usize, d: usize) -> Self {
        ParamGradient {
            weights: (0..rows).map(|k| flat[k * d..(k + 1) * d].to_vec()).collect(),
            intercepts: flat[rows * d..].to_vec(),
        }
    }
}

pub(crate) fn check_dim(expected: usize, x: &FeatureVector) -> Result<()> {
    if x.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: x.dim(),
        });
    }
    Ok(())
}

pub(crate) fn check_rows(x: &[FeatureVector], y: &[usize]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::invalid("no training rows"));
    }
    if x.len() != y.len() {
        return Err(Error::invalid(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let d = x[0].dim();
    for v in x {
        check_dim(d, v)?;
    }
    Ok(d)
}

pub(crate) fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}
