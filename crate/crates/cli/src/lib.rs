//! Batch driver: prepare data, train and compare classifiers, train
//! recommenders, and verify persisted models.

pub mod artifact;
pub mod compare;
pub mod config;
pub mod error;
pub mod generate;
pub mod output;
pub mod prepare;
pub mod recommend;
pub mod train;
pub mod verify;

use std::path::PathBuf;

use bookrating_core::features::LabelMode;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ModelChoice, RunConfig, TuningMethod};
use crate::error::CliError;
use crate::generate::{GenerateConfig, ScoreProfile};
use crate::train::TrainOutcome;

#[derive(Debug, Parser)]
#[command(name = "bookrating", version, about = "Book review rating prediction and recommendation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command; they override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Workspace directory for all outputs.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sample_rows: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelArg {
    Multiclass,
    Binary,
}

impl From<LabelArg> for LabelMode {
    fn from(l: LabelArg) -> Self {
        match l {
            LabelArg::Multiclass => LabelMode::Multiclass,
            LabelArg::Binary => LabelMode::Binary,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Join, clean and sample the raw CSV files.
    Prepare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        ratings: Option<PathBuf>,
        #[arg(long)]
        books: Option<PathBuf>,
    },
    /// Tune and train one model on the prepared data.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        model: Option<ModelChoice>,
        #[arg(long, value_enum)]
        label_mode: Option<LabelArg>,
        #[arg(long, value_enum)]
        tuning: Option<TuningMethod>,
    },
    /// Logistic regression with multiclass and with binary labels.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        tuning: Option<TuningMethod>,
    },
    /// Top-n titles for a user from a trained recommender.
    Recommend {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "als")]
        model: ModelChoice,
        #[arg(long)]
        user: String,
        #[arg(short, long, default_value_t = 5)]
        n: usize,
        /// Keep titles the user already rated.
        #[arg(long)]
        include_seen: bool,
        /// Also report holdout RMSE and R2.
        #[arg(long)]
        evaluate: bool,
        /// Print the result as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Reload a trained model directory and replay its probes.
    VerifyModel {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        path: PathBuf,
    },
    /// Write synthetic ratings and books CSV files.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20_000)]
        rows: usize,
        #[arg(long, default_value_t = 0.6)]
        correlation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "skewed")]
        profile: ScoreProfile,
        #[arg(long, default_value_t = 0.0)]
        malformed_fraction: f64,
    },
}

pub fn resolve(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    if let Some(n) = common.sample_rows {
        cfg.sample_rows = Some(n);
    }
    Ok(cfg)
}

/// Runs one command and returns the text to print.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Prepare { common, ratings, books } => {
            let mut cfg = resolve(&common)?;
            if ratings.is_some() {
                cfg.ratings_path = ratings;
            }
            if books.is_some() {
                cfg.books_path = books;
            }
            cfg.validate()?;
            let s = prepare::cmd_prepare(&cfg)?;
            Ok(format!(
                "prepared {} rows ({} joined, {} kept) into {}\n",
                s.rows_out,
                s.rows_in,
                s.rows_kept,
                cfg.prepared_dir().display()
            ))
        }
        Command::Train { common, model, label_mode, tuning } => {
            let mut cfg = resolve(&common)?;
            if let Some(m) = model {
                cfg.model = m;
            }
            if let Some(l) = label_mode {
                cfg.label_mode = l.into();
            }
            if let Some(t) = tuning {
                cfg.tuning.method = t;
            }
            Ok(match train::cmd_train(&cfg)? {
                TrainOutcome::Classifier(r) => train::render_train_report(&r),
                TrainOutcome::Als(r) => train::render_als_report(&r),
            })
        }
        Command::Compare { common, tuning } => {
            let mut cfg = resolve(&common)?;
            if let Some(t) = tuning {
                cfg.tuning.method = t;
            }
            Ok(compare::render_compare(&compare::cmd_compare(&cfg)?))
        }
        Command::Recommend { common, model, user, n, include_seen, evaluate, json } => {
            let mut cfg = resolve(&common)?;
            cfg.model = model;
            let r = recommend::cmd_recommend(&cfg, &user, n, include_seen, evaluate)?;
            if json {
                Ok(serde_json::to_string_pretty(&r)? + "\n")
            } else {
                Ok(recommend::render_recommendations(&cfg, &r))
            }
        }
        Command::VerifyModel { common: _, path } => {
            let r = verify::cmd_verify(&path)?;
            Ok(format!("verified {} model at {}: {} probes identical\n", r.kind, path.display(), r.probes))
        }
        Command::Generate { out, rows, correlation, seed, profile, malformed_fraction } => {
            std::fs::create_dir_all(&out)?;
            let cfg = GenerateConfig {
                rows,
                correlation,
                seed,
                profile,
                malformed_fraction,
                ..GenerateConfig::default()
            };
            let s = generate::generate(&cfg, &out.join("Books_rating.csv"), &out.join("books_data.csv"))?;
            std::fs::write(out.join("generate_summary.json"), serde_json::to_string_pretty(&s)? + "\n")?;
            Ok(format!(
                "wrote {} ratings ({} malformed) and {} books to {}\n",
                s.ratings_rows,
                s.malformed_rows,
                s.books_rows,
                out.display()
            ))
        }
    }
}
