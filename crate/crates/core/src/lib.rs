//! Rating prediction and recommendation pipeline for book review data.
//!
//! The crate is organised bottom-up:
//!
//! * [`table`]: typed columnar tables, CSV ingestion, joins and splits.
//! * [`features`]: tokenization, count vectors, TF-IDF, min-max scaling,
//!   label binarization and fitted pipelines.
//! * [`linear`]: multinomial logistic regression and linear SVC.
//! * [`tree`]: decision trees, random forests and gradient-boosted trees.
//! * [`selection`]: parameter grids, cross-validation, train/validation
//!   split and the classification/regression evaluators.
//! * [`recommender`]: explicit and implicit-feedback ALS.

pub mod classifier;
pub mod error;
pub mod features;
pub mod linear;
pub mod recommender;
pub mod rng;
pub mod selection;
pub mod table;
pub mod tree;
pub mod vector;

pub use error::{Error, Result};
pub use vector::FeatureVector;
