use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Classification metrics; precision, recall and F1 are support-weighted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<u64>>,
}

impl MetricsReport {
    pub fn support(&self) -> Vec<u64> {
        self.confusion.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn total(&self) -> u64 {
        self.support().iter().sum()
    }
}

pub fn evaluate_multiclass(preds: &[usize], truth: &[usize], num_classes: usize) -> Result<MetricsReport> {
    if preds.len() != truth.len() {
        return Err(Error::invalid(format!("{} predictions for {} labels", preds.len(), truth.len())));
    }
    if preds.is_empty() {
        return Err(Error::invalid("cannot evaluate an empty prediction set"));
    }
    let k = num_classes;
    let mut confusion = vec![vec![0u64; k]; k];
    for (&p, &t) in preds.iter().zip(truth) {
        if p >= k || t >= k {
            return Err(Error::invalid(format!("label out of range for {k} classes")));
        }
        confusion[t][p] += 1;
    }
    let total = preds.len() as f64;
    let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let (mut wp, mut wr, mut wf, mut correct) = (0.0, 0.0, 0.0, 0u64);
    for c in 0..k {
        let tp = confusion[c][c];
        let support: u64 = confusion[c].iter().sum();
        let predicted: u64 = (0..k).map(|t| confusion[t][c]).sum();
        let p = ratio(tp, predicted);
        let r = ratio(tp, support);
        let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        let share = support as f64 / total;
        wp += share * p;
        wr += share * r;
        wf += share * f1;
        correct += tp;
    }
    Ok(MetricsReport {
        accuracy: correct as f64 / total,
        weighted_precision: wp,
        weighted_recall: wr,
        weighted_f1: wf,
        confusion,
    })
}

pub fn evaluate_binary(preds: &[usize], truth: &[usize]) -> Result<MetricsReport> {
    evaluate_multiclass(preds, truth, 2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub rmse: f64,
    /// Absent when the truth has zero variance.
    pub r2: Option<f64>,
}

pub fn evaluate_regression(preds: &[f64], truth: &[f64]) -> Result<RegressionMetrics> {
    if preds.len() != truth.len() {
        return Err(Error::invalid(format!("{} predictions for {} targets", preds.len(), truth.len())));
    }
    if preds.len() < 2 {
        return Err(Error::invalid("regression metrics need at least two points"));
    }
    let n = truth.len() as f64;
    let ss_res: f64 = preds.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    let mean = truth.iter().sum::<f64>() / n;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean) * (t - mean)).sum();
    if !ss_res.is_finite() {
        return Err(Error::numeric("non-finite regression residuals"));
    }
    Ok(RegressionMetrics {
        rmse: (ss_res / n).sqrt(),
        r2: (ss_tot > 0.0).then(|| 1.0 - ss_res / ss_tot),
    })
}
