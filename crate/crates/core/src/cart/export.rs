//! Human-readable rule text and Graphviz DOT.
//!
//! Rule text puts one node per line, indented two spaces per level. Child
//! lines are prefixed `then` (value `<=` threshold) or `else` (value `>`):
//!
//! ```text
//! if rsi_14 <= 41.5
//!   then predict 0 [n0=120, n1=80]
//!   else predict 1 [n0=60, n1=95]
//! ```

use std::fmt::Write as _;

use super::tree::{DecisionTreeModel, TreeNode};
use crate::timefmt::format_f64;

pub fn export_rules(model: &DecisionTreeModel) -> String {
    fn walk(node: &TreeNode, names: &[String], depth: usize, prefix: &str, out: &mut String) {
        let indent = "  ".repeat(depth);
        match node {
            TreeNode::Leaf { counts, prediction } => {
                let _ = writeln!(
                    out,
                    "{indent}{prefix}predict {prediction} [n0={}, n1={}]",
                    counts.zeros, counts.ones
                );
            }
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
            } => {
                let _ = writeln!(
                    out,
                    "{indent}{prefix}if {} <= {}",
                    names[*feature],
                    format_f64(*threshold)
                );
                walk(left, names, depth + 1, "then ", out);
                walk(right, names, depth + 1, "else ", out);
            }
        }
    }
    let mut out = String::new();
    walk(&model.root, &model.feature_names, 0, "", &mut out);
    out
}

pub fn export_dot(model: &DecisionTreeModel) -> String {
    fn walk(node: &TreeNode, names: &[String], next_id: &mut usize, nodes: &mut String, edges: &mut String) -> usize {
        let id = *next_id;
        *next_id += 1;
        match node {
            TreeNode::Leaf { counts, prediction } => {
                let _ = writeln!(
                    nodes,
                    "  n{id} [label=\"predict {prediction}\\nn0={}, n1={}\", style=filled, fillcolor=\"{}\"];",
                    counts.zeros,
                    counts.ones,
                    if *prediction == 1 { "#c8e6c9" } else { "#ffcdd2" }
                );
            }
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
            } => {
                let _ = writeln!(
                    nodes,
                    "  n{id} [label=\"{} <= {}\"];",
                    names[*feature],
                    format_f64(*threshold)
                );
                let l = walk(left, names, next_id, nodes, edges);
                let r = walk(right, names, next_id, nodes, edges);
                let _ = writeln!(edges, "  n{id} -> n{l} [label=\"<=\"];");
                let _ = writeln!(edges, "  n{id} -> n{r} [label=\">\"];");
            }
        }
        id
    }
    let mut nodes = String::new();
    let mut edges = String::new();
    walk(&model.root, &model.feature_names, &mut 0, &mut nodes, &mut edges);
    format!("digraph decision_tree {{\n  node [shape=box, fontname=\"Helvetica\"];\n{nodes}{edges}}}\n")
}
