use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{expand_grid, ParamGrid, ParamMap};
use super::metrics::{evaluate_multiclass, MetricsReport};
use crate::error::{Error, Result};
use crate::rng;
use crate::table::Table;
use crate::vector::FeatureVector;

/// Feature rows with class labels in `0..num_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub x: Vec<FeatureVector>,
    pub y: Vec<usize>,
    pub num_classes: usize,
}

impl LabeledSet {
    pub fn new(x: Vec<FeatureVector>, y: Vec<usize>, num_classes: usize) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::invalid(format!("{} rows but {} labels", x.len(), y.len())));
        }
        if let Some(bad) = y.iter().find(|l| **l >= num_classes) {
            return Err(Error::invalid(format!("label {bad} out of range for {num_classes} classes")));
        }
        Ok(LabeledSet { x, y, num_classes })
    }

    /// Reads a vector column and an integer label column; rows with a null
    /// in either are an error.
    pub fn from_table(t: &Table, features: &str, label: &str, num_classes: usize) -> Result<Self> {
        let fx = t.vectors(features)?;
        let fy = t.int64(label)?;
        let mut x = Vec::with_capacity(fx.len());
        let mut y = Vec::with_capacity(fy.len());
        for (row, (v, l)) in fx.iter().zip(fy).enumerate() {
            match (v, l) {
                (Some(v), Some(l)) if *l >= 0 => {
                    x.push(v.clone());
                    y.push(*l as usize);
                }
                _ => return Err(Error::data(format!("row {row}: missing features or label"))),
            }
        }
        Self::new(x, y, num_classes)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn subset(&self, rows: &[usize]) -> LabeledSet {
        LabeledSet {
            x: rows.iter().map(|r| self.x[*r].clone()).collect(),
            y: rows.iter().map(|r| self.y[*r]).collect(),
            num_classes: self.num_classes,
        }
    }
}

/// An estimator that can be tuned over a parameter grid.
pub trait Trainer: Sync {
    type Model: Send;
    fn fit(&self, params: &ParamMap, data: &LabeledSet) -> Result<Self::Model>;
    fn predict(&self, model: &Self::Model, x: &FeatureVector) -> Result<usize>;
}

/// Selection metric; all are maximized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    WeightedPrecision,
    WeightedRecall,
    WeightedF1,
}

impl Metric {
    pub fn value(self, m: &MetricsReport) -> f64 {
        match self {
            Metric::Accuracy => m.accuracy,
            Metric::WeightedPrecision => m.weighted_precision,
            Metric::WeightedRecall => m.weighted_recall,
            Metric::WeightedF1 => m.weighted_f1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum TuneMethod {
    Cv { k: usize },
    Tvs { train_ratio: f64 },
}

impl TuneMethod {
    pub fn short_name(&self) -> &'static str {
        match self {
            TuneMethod::Cv { .. } => "cv",
            TuneMethod::Tvs { .. } => "tvs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub params: ParamMap,
    /// Metric per fold (one entry for a train/validation split).
    pub fold_metrics: Vec<f64>,
    /// Mean over folds; absent when the candidate failed.
    pub mean_metric: Option<f64>,
    pub error: Option<String>,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub method: TuneMethod,
    pub metric: Metric,
    pub seed: u64,
    pub candidates: Vec<CandidateResult>,
    pub best_index: usize,
    pub best_params: ParamMap,
    pub best_metric: f64,
    pub refit_wall_time_secs: f64,
}

impl TuneResult {
    /// Copy with every wall-time field zeroed, for reproducibility checks.
    pub fn without_times(&self) -> TuneResult {
        let mut r = self.clone();
        r.refit_wall_time_secs = 0.0;
        for c in &mut r.candidates {
            c.wall_time_secs = 0.0;
        }
        r
    }

    pub fn total_wall_time_secs(&self) -> f64 {
        self.candidates.iter().map(|c| c.wall_time_secs).sum::<f64>() + self.refit_wall_time_secs
    }
}

/// A tuning outcome together with the best parameters refitted on all rows.
pub struct Tuned<M> {
    pub result: TuneResult,
    pub model: M,
}

/// Seeded permutation of `0..n`.
pub fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::seeded(seed));
    idx
}

/// Shuffles rows by seed and deals them into `k` contiguous folds; the first
/// `n % k` folds get one extra row. Each fold is sorted ascending.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::invalid("cross-validation needs k >= 2"));
    }
    if k > n {
        return Err(Error::invalid(format!("k = {k} exceeds the {n} available rows")));
    }
    let perm = shuffled_indices(n, seed);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut fold = perm[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(folds)
}

/// Seeded train/validation split: the first `round(n * ratio)` rows of the
/// permutation train. Both parts are sorted ascending.
pub fn tvs_indices(n: usize, train_ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(Error::invalid("train_ratio must lie strictly between 0 and 1"));
    }
    let n_train = (n as f64 * train_ratio).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::invalid(format!(
            "train_ratio {train_ratio} leaves an empty side for {n} rows"
        )));
    }
    let perm = shuffled_indices(n, seed);
    let mut train = perm[..n_train].to_vec();
    let mut val = perm[n_train..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

pub fn cross_validate<T: Trainer>(trainer: &T, grid: &ParamGrid, data: &LabeledSet, k: usize, metric: Metric, seed: u64) -> Result<Tuned<T::Model>> {
    let folds = kfold_indices(data.len(), k, seed)?;
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..k)
        .map(|held| {
            let train = folds
                .iter()
                .enumerate()
                .filter(|(f, _)| *f != held)
                .flat_map(|(_, rows)| rows.iter().copied())
                .collect::<Vec<_>>();
            let mut train = train;
            train.sort_unstable();
            (train, folds[held].clone())
        })
        .collect();
    tune(trainer, grid, data, &splits, TuneMethod::Cv { k }, metric, seed)
}

pub fn train_validation_split<T: Trainer>(
    trainer: &T,
    grid: &ParamGrid,
    data: &LabeledSet,
    train_ratio: f64,
    metric: Metric,
    seed: u64,
) -> Result<Tuned<T::Model>> {
    let split = tvs_indices(data.len(), train_ratio, seed)?;
    tune(trainer, grid, data, &[split], TuneMethod::Tvs { train_ratio }, metric, seed)
}

struct FoldOutcome {
    metric: Result<f64>,
    secs: f64,
}

fn tune<T: Trainer>(
    trainer: &T,
    grid: &ParamGrid,
    data: &LabeledSet,
    splits: &[(Vec<usize>, Vec<usize>)],
    method: TuneMethod,
    metric: Metric,
    seed: u64,
) -> Result<Tuned<T::Model>> {
    let points = expand_grid(grid)?;
    let parts: Vec<(LabeledSet, LabeledSet)> = splits
        .iter()
        .map(|(tr, va)| (data.subset(tr), data.subset(va)))
        .collect();
    let nf = parts.len();

    // one job per (candidate, fold); results land in a pre-ordered vector
    let outcomes: Vec<FoldOutcome> = (0..points.len() * nf)
        .into_par_iter()
        .map(|job| {
            let (c, f) = (job / nf, job % nf);
            let (train, val) = &parts[f];
            let start = Instant::now();
            let metric = trainer.fit(&points[c], train).and_then(|model| {
                let preds = val.x.iter().map(|x| trainer.predict(&model, x)).collect::<Result<Vec<usize>>>()?;
                evaluate_multiclass(&preds, &val.y, data.num_classes).map(|m| metric.value(&m))
            });
            FoldOutcome {
                metric,
                secs: start.elapsed().as_secs_f64(),
            }
        })
        .collect();

    let mut candidates = Vec::with_capacity(points.len());
    let mut first_error: Option<Error> = None;
    let mut outcomes = outcomes.into_iter();
    for params in points {
        let mut fold_metrics = Vec::with_capacity(nf);
        let mut error = None;
        let mut secs = 0.0;
        for o in outcomes.by_ref().take(nf) {
            secs += o.secs;
            match o.metric {
                Ok(v) => fold_metrics.push(v),
                Err(e) => {
                    if error.is_none() {
                        error = Some(e.to_string());
                    }
                    if first_error.is_none() {
                        first_error = Some(e);
                    }
                }
            }
        }
        let mean_metric = error
            .is_none()
            .then(|| fold_metrics.iter().sum::<f64>() / nf as f64);
        candidates.push(CandidateResult {
            params,
            fold_metrics,
            mean_metric,
            error,
            wall_time_secs: secs,
        });
    }

    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        if let Some(m) = c.mean_metric {
            if best.map_or(true, |(_, b)| m > b) {
                best = Some((i, m));
            }
        }
    }
    let (best_index, best_metric) = match best {
        Some(b) => b,
        None => return Err(first_error.unwrap_or_else(|| Error::data("no candidate could be evaluated"))),
    };
    let best_params = candidates[best_index].params.clone();
    let start = Instant::now();
    let model = trainer.fit(&best_params, data)?;
    let refit_wall_time_secs = start.elapsed().as_secs_f64();

    Ok(Tuned {
        result: TuneResult {
            method,
            metric,
            seed,
            candidates,
            best_index,
            best_params,
            best_metric,
            refit_wall_time_secs,
        },
        model,
    })
}
