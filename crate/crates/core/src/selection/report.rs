//! Aligned plain-text tables for experiment reports.

use super::metrics::{MetricsReport, RegressionMetrics};
use crate::tree::Importances;

/// Left-aligns the first column and right-aligns the rest.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (i, cell) in r.iter().enumerate().take(cols) {
            width[i] = width[i].max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i == 0 {
                s.push_str(&format!("{:<w$}", c, w = width[0]));
            } else {
                s.push_str(&format!("  {:>w$}", c, w = width[i]));
            }
        }
        s.trim_end().to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

/// Wall time as seconds, minutes or hours (`12.3s`, `44m`, `4.7h`).
pub fn format_duration(secs: f64) -> String {
    if secs < 60.0 {
        format!("{secs:.1}s")
    } else if secs < 3600.0 {
        format!("{:.0}m", secs / 60.0)
    } else {
        format!("{:.1}h", secs / 3600.0)
    }
}

pub struct MetricsRow<'a> {
    pub model: String,
    pub metrics: &'a MetricsReport,
    pub wall_time_secs: f64,
}

/// `Model Name  Accuracy  Precision  Recall  F1  Time`.
pub fn render_metrics_table(rows: &[MetricsRow<'_>]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.model.clone(),
                format!("{:.4}", r.metrics.accuracy),
                format!("{:.4}", r.metrics.weighted_precision),
                format!("{:.4}", r.metrics.weighted_recall),
                format!("{:.4}", r.metrics.weighted_f1),
                format_duration(r.wall_time_secs),
            ]
        })
        .collect();
    render_table(&["Model Name", "Accuracy", "Precision", "Recall", "F1", "Time"], &body)
}

/// `Feature  Importance`, highest first.
pub fn render_importance_table(imp: &Importances) -> String {
    let body: Vec<Vec<String>> = imp
        .ranked()
        .into_iter()
        .map(|(name, v)| vec![name, format!("{v:.6}")])
        .collect();
    render_table(&["Feature", "Importance"], &body)
}

/// `Model  RMSE  R2`; an absent R² prints as `n/a`.
pub fn render_regression_table(rows: &[(String, &RegressionMetrics)]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, m)| {
            vec![
                name.clone(),
                format!("{:.4}", m.rmse),
                m.r2.map_or_else(|| "n/a".to_string(), |r| format!("{r:.4}")),
            ]
        })
        .collect();
    render_table(&["Model", "RMSE", "R2"], &body)
}

/// Confusion matrix with truth rows and predicted columns.
pub fn render_confusion(m: &MetricsReport) -> String {
    let k = m.confusion.len();
    let header: Vec<String> = std::iter::once("truth\\pred".to_string())
        .chain((0..k).map(|c| c.to_string()))
        .collect();
    let body: Vec<Vec<String>> = m
        .confusion
        .iter()
        .enumerate()
        .map(|(t, row)| std::iter::once(t.to_string()).chain(row.iter().map(u64::to_string)).collect())
        .collect();
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    render_table(&h, &body)
}
