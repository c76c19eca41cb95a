use std::time::Instant;

use bookrating_core::classifier::ModelKind;
use bookrating_core::features::{binarize_label, multiclass_label, LabelMode};
use bookrating_core::selection::report::{render_confusion, render_metrics_table, MetricsRow};
use bookrating_core::selection::{LabeledSet, MetricsReport, TuneResult};
use serde::{Deserialize, Serialize};

use crate::config::{label_name, RunConfig};
use crate::error::CliError;
use crate::output::OutputDir;
use crate::prepare::load_prepared;
use crate::train::{build_features, class_balance, grid_for, model_label, settings_lines, split_prepared, tune_and_test, FeatureData};

/// Majority-class share at or above which a comparison is inconclusive.
pub const DOMINANCE_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRun {
    pub label_mode: LabelMode,
    pub class_balance: Vec<usize>,
    pub majority_share: f64,
    pub single_class_dominant: bool,
    /// Absent when training was skipped because only one class is present.
    pub test_metrics: Option<MetricsReport>,
    pub tuning: Option<TuneResult>,
    pub skipped_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub config: RunConfig,
    pub model: String,
    pub train_rows: usize,
    pub test_rows: usize,
    pub multiclass: ModeRun,
    pub binary: ModeRun,
    /// Binary minus multiclass test accuracy.
    pub accuracy_delta: Option<f64>,
    pub inconclusive: bool,
    pub total_wall_time_secs: f64,
}

fn run_mode(cfg: &RunConfig, data: &FeatureData, mode: LabelMode) -> Result<ModeRun, CliError> {
    let k = mode.num_classes();
    // labels over every prepared row decide dominance
    let all: Vec<usize> = data.train.y.iter().chain(&data.test.y).copied().collect();
    let balance = class_balance(&all, k);
    let majority = *balance.iter().max().unwrap_or(&0);
    let share = majority as f64 / all.len().max(1) as f64;
    let classes_in_train = class_balance(&data.train.y, k).iter().filter(|c| **c > 0).count();
    let mut run = ModeRun {
        label_mode: mode,
        class_balance: balance,
        majority_share: share,
        single_class_dominant: share >= DOMINANCE_THRESHOLD,
        test_metrics: None,
        tuning: None,
        skipped_reason: None,
    };
    if classes_in_train < 2 {
        run.skipped_reason = Some("training rows contain a single class".into());
        return Ok(run);
    }
    let kind = ModelKind::Logistic;
    let outcome = tune_and_test(cfg, kind, &grid_for(cfg, kind), data)?;
    run.test_metrics = Some(outcome.test_metrics);
    run.tuning = Some(outcome.tuning);
    Ok(run)
}

fn relabel(set: &LabeledSet, scores: &[usize], mode: LabelMode) -> Result<LabeledSet, CliError> {
    let y = scores
        .iter()
        .map(|s| match mode {
            LabelMode::Binary => binarize_label(*s as i64 + 1),
            LabelMode::Multiclass => multiclass_label(*s as i64 + 1),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LabeledSet::new(set.x.clone(), y, mode.num_classes())?)
}

/// Trains logistic regression on identical features, split and seed, once
/// with five classes and once with binary labels.
pub fn cmd_compare(cfg: &RunConfig) -> Result<CompareReport, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let prepared = load_prepared(cfg)?;
    let (train_t, test_t) = split_prepared(cfg, &prepared)?;
    let multi = build_features(cfg, train_t, test_t, LabelMode::Multiclass)?;
    // the label stage is last and the features do not depend on it, so the
    // binary run reuses the multiclass features with relabelled targets
    let binary = FeatureData {
        train: relabel(&multi.train, &multi.train.y, LabelMode::Binary)?,
        test: relabel(&multi.test, &multi.test.y, LabelMode::Binary)?,
        pipeline: multi.pipeline.clone(),
        train_table: multi.train_table.clone(),
        test_table: multi.test_table.clone(),
    };

    let m = run_mode(cfg, &multi, LabelMode::Multiclass)?;
    let b = run_mode(cfg, &binary, LabelMode::Binary)?;
    let delta = match (&m.test_metrics, &b.test_metrics) {
        (Some(mm), Some(bm)) => Some(bm.accuracy - mm.accuracy),
        _ => None,
    };
    let inconclusive = m.single_class_dominant || b.single_class_dominant || delta.is_none();
    let report = CompareReport {
        config: cfg.clone(),
        model: ModelKind::Logistic.name().into(),
        train_rows: multi.train.len(),
        test_rows: multi.test.len(),
        multiclass: m,
        binary: b,
        accuracy_delta: delta,
        inconclusive,
        total_wall_time_secs: start.elapsed().as_secs_f64(),
    };
    let out = OutputDir::begin(cfg.compare_dir())?;
    out.write_json("report.json", &report)?;
    out.write_text("report.txt", &render_compare(&report))?;
    out.finish()?;
    Ok(report)
}

pub fn render_compare(r: &CompareReport) -> String {
    let mut s = String::from("Logistic regression, multiclass vs binary labels\n");
    s.push_str(&settings_lines(&r.config));
    s.push_str(&format!("rows: {} train, {} test\n\n", r.train_rows, r.test_rows));
    let label = model_label(ModelKind::Logistic, r.config.tuning.method);
    let mut rows = Vec::new();
    for run in [&r.multiclass, &r.binary] {
        if let (Some(m), Some(t)) = (&run.test_metrics, &run.tuning) {
            rows.push(MetricsRow {
                model: format!("{label} {}", label_name(run.label_mode)),
                metrics: m,
                wall_time_secs: t.total_wall_time_secs(),
            });
        }
    }
    s.push_str(&render_metrics_table(&rows));
    match r.accuracy_delta {
        Some(d) => s.push_str(&format!("\naccuracy delta (binary - multiclass): {d:+.4}\n")),
        None => s.push_str("\naccuracy delta: n/a\n"),
    }
    if r.inconclusive {
        s.push_str("comparison INCONCLUSIVE: ");
        let reasons: Vec<String> = [&r.multiclass, &r.binary]
            .iter()
            .filter_map(|run| {
                if let Some(why) = &run.skipped_reason {
                    Some(format!("{} run skipped ({why})", label_name(run.label_mode)))
                } else if run.single_class_dominant {
                    Some(format!(
                        "{} labels single-class-dominant (majority share {:.3} >= {DOMINANCE_THRESHOLD})",
                        label_name(run.label_mode),
                        run.majority_share
                    ))
                } else {
                    None
                }
            })
            .collect();
        s.push_str(&reasons.join("; "));
        s.push('\n');
    }
    for run in [&r.multiclass, &r.binary] {
        s.push_str(&format!(
            "\n{} class balance: {}\n",
            label_name(run.label_mode),
            run.class_balance.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
        ));
        if let Some(m) = &run.test_metrics {
            s.push_str(&format!("Confusion matrix ({})\n", label_name(run.label_mode)));
            s.push_str(&render_confusion(m));
        }
    }
    s
}
