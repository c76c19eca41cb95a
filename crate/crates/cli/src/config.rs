use std::path::{Path, PathBuf};

use bookrating_core::classifier::ModelKind;
use bookrating_core::features::LabelMode;
use bookrating_core::recommender::AlsConfig;
use bookrating_core::selection::{Metric, ParamGrid};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ModelChoice {
    Logistic,
    Svc,
    Dtree,
    Rforest,
    Gbt,
    Als,
    AlsImplicit,
}

impl ModelChoice {
    pub fn name(self) -> &'static str {
        match self {
            ModelChoice::Logistic => "logistic",
            ModelChoice::Svc => "svc",
            ModelChoice::Dtree => "dtree",
            ModelChoice::Rforest => "rforest",
            ModelChoice::Gbt => "gbt",
            ModelChoice::Als => "als",
            ModelChoice::AlsImplicit => "als_implicit",
        }
    }

    /// The classifier family, or `None` for the recommenders.
    pub fn classifier(self) -> Option<ModelKind> {
        Some(match self {
            ModelChoice::Logistic => ModelKind::Logistic,
            ModelChoice::Svc => ModelKind::Svc,
            ModelChoice::Dtree => ModelKind::Dtree,
            ModelChoice::Rforest => ModelKind::Rforest,
            ModelChoice::Gbt => ModelKind::Gbt,
            ModelChoice::Als | ModelChoice::AlsImplicit => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TuningMethod {
    Cv,
    Tvs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningConfig {
    pub method: TuningMethod,
    pub k: usize,
    pub train_ratio: f64,
    pub metric: Metric,
    /// Replaces the model's default grid when present.
    pub grid: Option<ParamGrid>,
}

impl Default for TuningConfig {
    fn default() -> Self {
        TuningConfig {
            method: TuningMethod::Cv,
            k: 3,
            train_ratio: 0.8,
            metric: Metric::WeightedF1,
            grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub vocab_size: usize,
    pub min_df: u64,
    /// Adds a TF-IDF block for the long review text.
    pub use_review_text: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            vocab_size: 4096,
            min_df: 2,
            use_review_text: false,
        }
    }
}

/// Effective settings for one command. Every field has a default, and
/// the whole structure is echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub ratings_path: Option<PathBuf>,
    pub books_path: Option<PathBuf>,
    pub sample_rows: Option<usize>,
    pub label_mode: LabelMode,
    pub model: ModelChoice,
    pub tuning: TuningConfig,
    pub features: FeatureConfig,
    /// Held-out share of prepared rows used for the final test metrics.
    pub test_fraction: f64,
    pub als: AlsConfig,
    pub seed: u64,
    /// Workspace directory shared by all commands.
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            ratings_path: None,
            books_path: None,
            sample_rows: None,
            label_mode: LabelMode::Multiclass,
            model: ModelChoice::Logistic,
            tuning: TuningConfig::default(),
            features: FeatureConfig::default(),
            test_fraction: 0.2,
            als: AlsConfig::default(),
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    /// Rejects contradictory settings before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if let Some(kind) = self.model.classifier() {
            if kind.binary_only() && self.label_mode != LabelMode::Binary {
                return bad(format!("model {} requires label_mode binary", kind.name()));
            }
        }
        if self.tuning.k < 2 {
            return bad("tuning.k must be at least 2".into());
        }
        if !(self.tuning.train_ratio > 0.0 && self.tuning.train_ratio < 1.0) {
            return bad("tuning.train_ratio must lie strictly between 0 and 1".into());
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad("test_fraction must lie strictly between 0 and 1".into());
        }
        if self.features.vocab_size == 0 {
            return bad("features.vocab_size must be positive".into());
        }
        if self.sample_rows == Some(0) {
            return bad("sample_rows must be positive".into());
        }
        if self.als.rank == 0 || !(self.als.reg >= 0.0) || !(self.als.alpha > 0.0) {
            return bad("als needs rank >= 1, reg >= 0 and alpha > 0".into());
        }
        if let Some(g) = &self.tuning.grid {
            if g.axes.values().any(Vec::is_empty) {
                return bad("tuning.grid axes must be non-empty".into());
            }
        }
        Ok(())
    }

    pub fn prepared_dir(&self) -> PathBuf {
        self.out.join("prepared")
    }

    pub fn train_dir(&self) -> PathBuf {
        match self.model.classifier() {
            Some(_) => self.out.join(format!("train-{}-{}", self.model.name(), label_name(self.label_mode))),
            None => self.out.join(format!("train-{}", self.model.name())),
        }
    }

    pub fn compare_dir(&self) -> PathBuf {
        self.out.join("compare")
    }

    /// The ALS settings with the implicit flag and seed taken from the
    /// model choice and run seed.
    pub fn als_config(&self) -> AlsConfig {
        AlsConfig {
            implicit: self.model == ModelChoice::AlsImplicit,
            seed: self.seed,
            ..self.als.clone()
        }
    }
}

pub fn label_name(m: LabelMode) -> &'static str {
    match m {
        LabelMode::Multiclass => "multiclass",
        LabelMode::Binary => "binary",
    }
}
