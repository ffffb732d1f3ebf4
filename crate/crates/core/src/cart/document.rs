//! JSON model documents.
//!
//! ```json
//! {
//!   "format": "treetrade.decision_tree",
//!   "version": 1,
//!   "feature_names": ["ret_1", "..."],
//!   "config": {"max_depth": 4, "min_samples_split": 2, "min_gain": 0.0},
//!   "train_range": {"start": "...", "end": "..."},
//!   "root": {"feature": "rsi_14", "threshold": 41.5,
//!            "left": {"counts": [120, 80], "prediction": 0},
//!            "right": {"counts": [60, 95], "prediction": 1}}
//! }
//! ```
//!
//! `train_range` may be `null`. Thresholds are written in shortest round-trip
//! form and read back bit-exactly.

use serde::{Deserialize, Serialize};

use super::tree::{check_feature_names, ClassCounts, DecisionTreeModel, TrainConfig, TreeNode};
use crate::data::TimeRange;
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "treetrade.decision_tree";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format: String,
    version: u32,
    feature_names: Vec<String>,
    config: TrainConfig,
    train_range: Option<TimeRange>,
    root: NodeDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeDoc {
    Internal(InternalDoc),
    Leaf(LeafDoc),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InternalDoc {
    feature: String,
    threshold: f64,
    left: Box<NodeDoc>,
    right: Box<NodeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeafDoc {
    counts: ClassCounts,
    prediction: u8,
}

fn to_doc(node: &TreeNode, names: &[String]) -> NodeDoc {
    match node {
        TreeNode::Leaf { counts, prediction } => NodeDoc::Leaf(LeafDoc {
            counts: *counts,
            prediction: *prediction,
        }),
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } => NodeDoc::Internal(InternalDoc {
            feature: names[*feature].clone(),
            threshold: *threshold,
            left: Box::new(to_doc(left, names)),
            right: Box::new(to_doc(right, names)),
        }),
    }
}

fn from_doc(doc: NodeDoc, names: &[String], depth: usize, max_depth: usize) -> Result<TreeNode> {
    match doc {
        NodeDoc::Leaf(LeafDoc { counts, prediction }) => {
            if prediction != counts.majority() {
                return Err(Error::Model(format!(
                    "leaf prediction {prediction} disagrees with counts [{}, {}]",
                    counts.zeros, counts.ones
                )));
            }
            Ok(TreeNode::Leaf { counts, prediction })
        }
        NodeDoc::Internal(InternalDoc {
            feature,
            threshold,
            left,
            right,
        }) => {
            if depth >= max_depth {
                return Err(Error::Model(format!("tree deeper than max_depth {max_depth}")));
            }
            let index = names
                .iter()
                .position(|n| *n == feature)
                .ok_or_else(|| Error::Model(format!("node uses unknown feature {feature:?}")))?;
            if !threshold.is_finite() {
                return Err(Error::Model(format!("non-finite threshold on {feature}")));
            }
            Ok(TreeNode::Internal {
                feature: index,
                threshold,
                left: Box::new(from_doc(*left, names, depth + 1, max_depth)?),
                right: Box::new(from_doc(*right, names, depth + 1, max_depth)?),
            })
        }
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn serialize(model: &DecisionTreeModel) -> String {
    let doc = ModelDoc {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        feature_names: model.feature_names.clone(),
        config: model.config,
        train_range: model.train_range,
        root: to_doc(&model.root, &model.feature_names),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("model documents always serialise");
    text.push('\n');
    text
}

pub fn deserialize(text: &str) -> Result<DecisionTreeModel> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| Error::Model(format!("malformed document: {e}")))?;
    if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
        return Err(Error::Model(format!(
            "unsupported document {} v{} (expected {MODEL_FORMAT} v{MODEL_VERSION})",
            doc.format, doc.version
        )));
    }
    check_feature_names(&doc.feature_names)?;
    doc.config.validate()?;
    let root = from_doc(doc.root, &doc.feature_names, 0, doc.config.max_depth)?;
    Ok(DecisionTreeModel {
        feature_names: doc.feature_names,
        config: doc.config,
        train_range: doc.train_range,
        root,
    })
}
