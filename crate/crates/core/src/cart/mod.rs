//! Binary classification trees grown greedily on Gini impurity.
//!
//! Splits route `value <= threshold` to the left child. Candidate thresholds
//! are midpoints between consecutive distinct values of a feature; among
//! equal-gain candidates the lowest feature index wins, then the lowest
//! threshold.

mod document;
mod export;
mod tree;

pub use document::{deserialize, serialize, MODEL_FORMAT, MODEL_VERSION};
pub use export::{export_dot, export_rules};
pub use tree::{
    best_split, feature_usage, fit, gini, predict, split_gain, ClassCounts, Dataset, DecisionTreeModel, Split,
    TrainConfig, TreeNode,
};
