//! Decision trees, random forests and gradient-boosted trees.
//!
//! Split search works directly on sparse rows through a per-feature index of
//! nonzero entries; rows absent from a column are treated as zeros in bulk.

mod cart;
mod forest;
mod gbt;
mod importance;
mod split;

pub use self::cart::{predict_tree, train_decision_tree, LeafValue, TreeConfig, TreeNode};
pub use self::forest::{predict_forest, train_random_forest, ForestConfig, ForestModel};
pub use self::gbt::{log_loss, predict_gbt, sigmoid, train_gbt, GbtConfig, GbtModel};
pub use self::importance::{feature_importances, raw_feature_importances, Importances, TreeModelRef};
pub use self::split::{best_split, gini, Split};
