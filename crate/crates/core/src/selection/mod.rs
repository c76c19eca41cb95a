//! Parameter grids, cross-validation, train/validation split, evaluators
//! and report tables.

mod grid;
mod metrics;
pub mod report;
mod tune;

pub use self::grid::{expand_grid, format_params, ParamGrid, ParamMap, ParamValue};
pub use self::metrics::{evaluate_binary, evaluate_multiclass, evaluate_regression, MetricsReport, RegressionMetrics};
pub use self::tune::{
    cross_validate, kfold_indices, shuffled_indices, train_validation_split, tvs_indices, CandidateResult, LabeledSet, Metric,
    TuneMethod, TuneResult, Tuned, Trainer,
};
