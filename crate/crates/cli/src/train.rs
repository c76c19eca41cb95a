use std::time::Instant;

use bookrating_core::classifier::{Classifier, ClassifierTrainer, ModelKind};
use bookrating_core::features::{pipeline_fit_transform, LabelMode, PipelineModel, StageSpec};
use bookrating_core::recommender::{build_interactions, evaluate_holdout, recommend_top_n, train_als, BuildReport, HoldoutReport, InteractionSet};
use bookrating_core::selection::report::{render_confusion, render_importance_table, render_metrics_table, render_regression_table, render_table, MetricsRow};
use bookrating_core::selection::{
    cross_validate, evaluate_multiclass, format_params, train_validation_split, LabeledSet, MetricsReport, ParamGrid, TuneResult,
};
use bookrating_core::table::{save_table, split_random, Table};
use bookrating_core::tree::Importances;
use bookrating_core::FeatureVector;
use serde::{Deserialize, Serialize};

use crate::artifact::{ModelArtifact, ModelBody};
use crate::config::{label_name, FeatureConfig, ModelChoice, RunConfig, TuningMethod};
use crate::error::CliError;
use crate::output::OutputDir;
use crate::prepare::load_prepared;

pub const FEATURES: &str = "features";
pub const LABEL: &str = "label";
const PROBE_ROWS: usize = 1000;
const PROBE_USERS: usize = 50;

/// The feature pipeline: scaled price and review time plus TF-IDF of the
/// review summary (and optionally the review text), then the label.
pub fn feature_stages(f: &FeatureConfig, label: Option<LabelMode>) -> Vec<StageSpec> {
    let s = |x: &str| x.to_string();
    let mut stages = vec![
        StageSpec::MinMax { input: s("price"), output: s("price_scaled") },
        StageSpec::MinMax { input: s("r_time"), output: s("time_scaled") },
    ];
    let mut inputs = vec![s("price_scaled"), s("time_scaled")];
    let mut text = |col: &str, prefix: &str| {
        stages.push(StageSpec::Tokenize { input: s(col), output: format!("{prefix}_tokens") });
        stages.push(StageSpec::StopWords { input: format!("{prefix}_tokens"), output: format!("{prefix}_terms"), stopwords: None });
        stages.push(StageSpec::CountVectorizer {
            input: format!("{prefix}_terms"),
            output: format!("{prefix}_counts"),
            vocab_size: f.vocab_size,
            min_df: f.min_df,
        });
        stages.push(StageSpec::Idf { input: format!("{prefix}_counts"), output: format!("{prefix}_tfidf") });
        inputs.push(format!("{prefix}_tfidf"));
    };
    text("r_summary", "summary");
    if f.use_review_text {
        text("r_review", "review");
    }
    stages.push(StageSpec::Assemble { inputs, output: s(FEATURES) });
    if let Some(mode) = label {
        stages.push(StageSpec::Label { input: s("r_score"), output: s(LABEL), mode });
    }
    stages
}

/// Train/test tables and their transformed labeled sets.
pub struct FeatureData {
    pub pipeline: PipelineModel,
    pub train_table: Table,
    pub test_table: Table,
    pub train: LabeledSet,
    pub test: LabeledSet,
}

pub fn split_prepared(cfg: &RunConfig, t: &Table) -> Result<(Table, Table), CliError> {
    let (train, test) = split_random(t, 1.0 - cfg.test_fraction, cfg.seed)?;
    if train.row_count() == 0 || test.row_count() == 0 {
        return Err(bookrating_core::Error::data("train/test split left an empty side; use more rows").into());
    }
    Ok((train, test))
}

pub fn build_features(cfg: &RunConfig, train_table: Table, test_table: Table, mode: LabelMode) -> Result<FeatureData, CliError> {
    let (pipeline, train_t) = pipeline_fit_transform(&feature_stages(&cfg.features, Some(mode)), &train_table)?;
    let test_t = pipeline.transform(&test_table)?;
    let k = mode.num_classes();
    Ok(FeatureData {
        train: LabeledSet::from_table(&train_t, FEATURES, LABEL, k)?,
        test: LabeledSet::from_table(&test_t, FEATURES, LABEL, k)?,
        pipeline,
        train_table,
        test_table,
    })
}

pub fn class_balance(y: &[usize], k: usize) -> Vec<usize> {
    let mut c = vec![0; k];
    for l in y {
        c[*l] += 1;
    }
    c
}

pub struct ClassifierOutcome {
    pub tuning: TuneResult,
    pub model: Classifier,
    pub test_metrics: MetricsReport,
    pub predictions: Vec<usize>,
    pub importances: Option<Importances>,
}

pub fn grid_for(cfg: &RunConfig, kind: ModelKind) -> ParamGrid {
    cfg.tuning.grid.clone().unwrap_or_else(|| kind.default_grid())
}

pub fn tune_and_test(cfg: &RunConfig, kind: ModelKind, grid: &ParamGrid, data: &FeatureData) -> Result<ClassifierOutcome, CliError> {
    let trainer = ClassifierTrainer::new(kind, cfg.seed);
    let t = &cfg.tuning;
    let tuned = match t.method {
        TuningMethod::Cv => cross_validate(&trainer, grid, &data.train, t.k, t.metric, cfg.seed)?,
        TuningMethod::Tvs => train_validation_split(&trainer, grid, &data.train, t.train_ratio, t.metric, cfg.seed)?,
    };
    let predictions = data.test.x.iter().map(|x| tuned.model.predict(x)).collect::<Result<Vec<_>, _>>()?;
    let test_metrics = evaluate_multiclass(&predictions, &data.test.y, data.test.num_classes)?;
    let importances = data.pipeline.block_map().and_then(|b| tuned.model.importances(b));
    Ok(ClassifierOutcome {
        tuning: tuned.result,
        model: tuned.model,
        test_metrics,
        predictions,
        importances,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub prepared_rows: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub test_fraction: f64,
    pub split_seed: u64,
    pub feature_dim: usize,
    pub class_balance_train: Vec<usize>,
    pub class_balance_test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: RunConfig,
    pub model: String,
    pub label_mode: LabelMode,
    pub dataset: DatasetSummary,
    pub tuning: TuneResult,
    pub test_metrics: MetricsReport,
    pub importances: Option<Importances>,
    pub total_wall_time_secs: f64,
}

/// Saved alongside a model so `verify-model` can replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutputs {
    pub features: Vec<FeatureVector>,
    pub predictions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecommendations {
    pub n: usize,
    pub users: Vec<usize>,
    pub items: Vec<Vec<(usize, f64)>>,
}

pub fn model_label(kind: ModelKind, method: TuningMethod) -> String {
    let m = match method {
        TuningMethod::Cv => "cv",
        TuningMethod::Tvs => "tvs",
    };
    format!("{} ({m})", kind.display_name())
}

pub fn tuning_table(r: &TuneResult) -> String {
    let rows: Vec<Vec<String>> = r
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            vec![
                format!("{}{}", if i == r.best_index { "*" } else { " " }, format_params(&c.params)),
                c.mean_metric.map_or_else(|| "failed".into(), |m| format!("{m:.4}")),
                bookrating_core::selection::report::format_duration(c.wall_time_secs),
            ]
        })
        .collect();
    render_table(&["Candidate", "Mean metric", "Time"], &rows)
}

pub fn settings_lines(cfg: &RunConfig) -> String {
    let t = &cfg.tuning;
    let tuning = match t.method {
        TuningMethod::Cv => format!("{}-fold cross-validation", t.k),
        TuningMethod::Tvs => format!("train/validation split, train ratio {}", t.train_ratio),
    };
    format!(
        "split: {:.0}/{:.0} seeded train/test (seed {})\ntuning: {tuning}, selection metric {:?}\nfeatures: vocab_size {}, min_df {}, review text {}\n",
        (1.0 - cfg.test_fraction) * 100.0,
        cfg.test_fraction * 100.0,
        cfg.seed,
        t.metric,
        cfg.features.vocab_size,
        cfg.features.min_df,
        if cfg.features.use_review_text { "on" } else { "off" }
    )
}

fn run_classifier(cfg: &RunConfig, kind: ModelKind) -> Result<TrainReport, CliError> {
    let start = Instant::now();
    let prepared = load_prepared(cfg)?;
    let (train_t, test_t) = split_prepared(cfg, &prepared)?;
    let data = build_features(cfg, train_t, test_t, cfg.label_mode)?;
    let outcome = tune_and_test(cfg, kind, &grid_for(cfg, kind), &data)?;
    let k = cfg.label_mode.num_classes();

    let report = TrainReport {
        config: cfg.clone(),
        model: kind.name().into(),
        label_mode: cfg.label_mode,
        dataset: DatasetSummary {
            prepared_rows: prepared.row_count(),
            train_rows: data.train.len(),
            test_rows: data.test.len(),
            test_fraction: cfg.test_fraction,
            split_seed: cfg.seed,
            feature_dim: data.pipeline.block_map().map_or(0, |b| b.dim()),
            class_balance_train: class_balance(&data.train.y, k),
            class_balance_test: class_balance(&data.test.y, k),
        },
        tuning: outcome.tuning.clone(),
        test_metrics: outcome.test_metrics.clone(),
        importances: outcome.importances.clone(),
        total_wall_time_secs: start.elapsed().as_secs_f64(),
    };

    let out = OutputDir::begin(cfg.train_dir())?;
    out.write_text("pipeline.json", &data.pipeline.to_json()?)?;
    let artifact = ModelArtifact::new(ModelBody::Classifier {
        label_mode: cfg.label_mode,
        classifier: outcome.model.clone(),
    });
    out.write_text("model.json", &artifact.to_json()?)?;
    let probe_rows: Vec<usize> = (0..data.test_table.row_count().min(PROBE_ROWS)).collect();
    save_table(&data.test_table.take(&probe_rows), out.file("probes"))?;
    out.write_json(
        "probe_outputs.json",
        &ProbeOutputs {
            features: data.test.x[..probe_rows.len()].to_vec(),
            predictions: outcome.predictions[..probe_rows.len()].to_vec(),
        },
    )?;
    out.write_json("report.json", &report)?;
    out.write_text("report.txt", &render_train_report(&report))?;
    out.finish()?;
    Ok(report)
}

pub fn render_train_report(r: &TrainReport) -> String {
    let kind: ModelKind = r.model.parse().expect("known model");
    let mut s = format!("model: {} / {} labels\n", kind.display_name(), label_name(r.label_mode));
    s.push_str(&settings_lines(&r.config));
    s.push_str(&format!(
        "rows: {} prepared, {} train, {} test; feature dim {}\n\n",
        r.dataset.prepared_rows, r.dataset.train_rows, r.dataset.test_rows, r.dataset.feature_dim
    ));
    s.push_str(&render_metrics_table(&[MetricsRow {
        model: model_label(kind, r.config.tuning.method),
        metrics: &r.test_metrics,
        wall_time_secs: r.tuning.total_wall_time_secs(),
    }]));
    s.push_str("\nTuning candidates (* = selected)\n");
    s.push_str(&tuning_table(&r.tuning));
    s.push_str("\nConfusion matrix (test)\n");
    s.push_str(&render_confusion(&r.test_metrics));
    if let Some(imp) = &r.importances {
        s.push_str("\nFeature importances\n");
        if imp.degenerate {
            s.push_str("(model has no splits; all importances are zero)\n");
        }
        s.push_str(&render_importance_table(imp));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlsReport {
    pub config: RunConfig,
    pub model: String,
    pub interactions: BuildReport,
    pub users: usize,
    pub items: usize,
    pub triples: usize,
    pub holdout: HoldoutReport,
    pub final_objective: Option<f64>,
    pub warnings: Vec<String>,
    pub total_wall_time_secs: f64,
}

pub const R2_NOTE: &str = "R2 = 1 - SS_res / SS_tot over the held-out ratings. A negative value means the \
predictions are further from the held-out ratings than their mean is; implicit-feedback scores are \
preferences near 0..1 compared against raw 1-5 ratings, so their R2 is expected to be strongly negative.";

pub fn interactions_from(t: &Table) -> Result<(InteractionSet, BuildReport), CliError> {
    Ok(build_interactions(t, "user_id", "title", "r_score")?)
}

pub fn als_display(m: ModelChoice) -> &'static str {
    if m == ModelChoice::AlsImplicit {
        "ALS Implicit"
    } else {
        "ALS"
    }
}

fn run_als(cfg: &RunConfig) -> Result<AlsReport, CliError> {
    let start = Instant::now();
    let prepared = load_prepared(cfg)?;
    let (data, build) = interactions_from(&prepared)?;
    let als = cfg.als_config();
    let (_, holdout) = evaluate_holdout(&data, &als, cfg.seed)?;
    let model = train_als(&data, &als)?;

    let report = AlsReport {
        config: cfg.clone(),
        model: cfg.model.name().into(),
        interactions: build,
        users: data.num_users(),
        items: data.num_items(),
        triples: data.triples.len(),
        holdout,
        final_objective: model.objective_trace.last().copied(),
        warnings: model.warnings.clone(),
        total_wall_time_secs: start.elapsed().as_secs_f64(),
    };
    let users: Vec<usize> = (0..data.num_users().min(PROBE_USERS)).collect();
    let items = users
        .iter()
        .map(|u| recommend_top_n(&model, Some(*u), 5, false, &data).map(|r| r.items))
        .collect::<Result<Vec<_>, _>>()?;

    let out = OutputDir::begin(cfg.train_dir())?;
    out.write_text("model.json", &ModelArtifact::new(ModelBody::Factor { factor: model }).to_json()?)?;
    out.write_json("probe_recommendations.json", &ProbeRecommendations { n: 5, users, items })?;
    out.write_json("report.json", &report)?;
    out.write_text("report.txt", &render_als_report(&report))?;
    out.finish()?;
    Ok(report)
}

pub fn render_als_report(r: &AlsReport) -> String {
    let name = als_display(r.config.model);
    let a = &r.config.als;
    let mut s = format!(
        "model: {name}; rank {}, reg {}, sweeps {}, alpha {}, seed {}\n",
        a.rank, a.reg, a.max_sweeps, a.alpha, r.config.seed
    );
    s.push_str(&format!(
        "interactions: {} users, {} items, {} ratings ({} rows dropped, {} duplicates replaced)\n",
        r.users, r.items, r.triples, r.interactions.dropped_null, r.interactions.duplicates_replaced
    ));
    s.push_str(&format!(
        "holdout: one rating per user with >= 2 ratings; {} train, {} test, {} cold-start predictions\n\n",
        r.holdout.train_triples, r.holdout.test_triples, r.holdout.cold_start_predictions
    ));
    s.push_str(&render_regression_table(&[(name.to_string(), &r.holdout.metrics)]));
    s.push('\n');
    s.push_str(R2_NOTE);
    s.push('\n');
    for w in &r.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    s
}

pub enum TrainOutcome {
    Classifier(Box<TrainReport>),
    Als(Box<AlsReport>),
}

pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome, CliError> {
    cfg.validate()?;
    match cfg.model.classifier() {
        Some(kind) => run_classifier(cfg, kind).map(|r| TrainOutcome::Classifier(Box::new(r))),
        None => run_als(cfg).map(|r| TrainOutcome::Als(Box::new(r))),
    }
}
