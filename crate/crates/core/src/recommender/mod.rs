//! Matrix factorization by alternating least squares, for explicit ratings
//! and for implicit confidence-weighted feedback.

mod als;
mod interactions;
mod serve;

pub use self::als::{
    als_objective, cholesky_solve, confidence, preference, train_als, train_als_explicit, train_als_implicit, AlsConfig, FactorModel,
    FACTOR_FORMAT_VERSION,
};
pub use self::interactions::{build_interactions, BuildReport, InteractionSet};
pub use self::serve::{evaluate_holdout, holdout_split, recommend_top_n, score, HoldoutReport, Recommendations, Scored};
