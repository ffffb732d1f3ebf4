//! Exhaustive greedy tree builder: at every node, enumerate every feature and
//! every midpoint between distinct values, partition the rows explicitly and
//! keep the first candidate with the strictly largest gain.

use treetrade::cart::{split_gain, ClassCounts, DecisionTreeModel, TrainConfig, TreeNode};

fn counts(labels: &[u8], rows: &[usize]) -> ClassCounts {
    let ones = rows.iter().filter(|r| labels[**r] == 1).count() as u64;
    ClassCounts::new(rows.len() as u64 - ones, ones)
}

fn candidates(values: Vec<f64>) -> Vec<f64> {
    let mut v = values;
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.windows(2)
        .map(|w| {
            let m = w[0] + (w[1] - w[0]) / 2.0;
            if m >= w[1] {
                w[0]
            } else {
                m
            }
        })
        .collect()
}

fn grow(columns: &[Vec<f64>], labels: &[u8], rows: Vec<usize>, depth: usize, cfg: &TrainConfig) -> TreeNode {
    let here = counts(labels, &rows);
    let leaf = TreeNode::Leaf {
        counts: here,
        prediction: u8::from(here.ones > here.zeros),
    };
    if here.zeros == 0 || here.ones == 0 || depth >= cfg.max_depth || rows.len() < cfg.min_samples_split.max(2) {
        return leaf;
    }
    let mut best: Option<(usize, f64, f64)> = None;
    for (f, col) in columns.iter().enumerate() {
        for thr in candidates(rows.iter().map(|r| col[*r]).collect()) {
            let left: Vec<usize> = rows.iter().copied().filter(|r| col[*r] <= thr).collect();
            let right: Vec<usize> = rows.iter().copied().filter(|r| col[*r] > thr).collect();
            let gain = split_gain(counts(labels, &left), counts(labels, &right));
            if gain > cfg.min_gain && best.is_none_or(|(_, _, g)| gain > g) {
                best = Some((f, thr, gain));
            }
        }
    }
    let Some((feature, threshold, _)) = best else {
        return leaf;
    };
    let col = &columns[feature];
    let left = rows.iter().copied().filter(|r| col[*r] <= threshold).collect();
    let right = rows.iter().copied().filter(|r| col[*r] > threshold).collect();
    TreeNode::Internal {
        feature,
        threshold,
        left: Box::new(grow(columns, labels, left, depth + 1, cfg)),
        right: Box::new(grow(columns, labels, right, depth + 1, cfg)),
    }
}

pub fn greedy_tree(feature_names: &[&str], rows: &[Vec<f64>], labels: &[u8], cfg: &TrainConfig) -> DecisionTreeModel {
    let columns: Vec<Vec<f64>> = (0..feature_names.len())
        .map(|k| rows.iter().map(|r| r[k]).collect())
        .collect();
    DecisionTreeModel {
        feature_names: feature_names.iter().map(|s| s.to_string()).collect(),
        config: *cfg,
        train_range: None,
        root: grow(&columns, labels, (0..rows.len()).collect(), 0, cfg),
    }
}
