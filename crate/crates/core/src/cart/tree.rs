use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::TimeRange;
use crate::error::{Error, Result};
use crate::features::{feature_index, FeatureMatrix, LabelVector, FEATURE_COUNT, FEATURE_NAMES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// A split is accepted only when its gain is strictly greater.
    pub min_gain: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_depth: 4,
            min_samples_split: 2,
            min_gain: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn with_depth(max_depth: usize) -> Self {
        TrainConfig {
            max_depth,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::InvalidInput("max_depth must be at least 1".into()));
        }
        if !(self.min_gain.is_finite() && self.min_gain >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "min_gain must be non-negative, got {}",
                self.min_gain
            )));
        }
        Ok(())
    }
}

/// Number of 0-labelled and 1-labelled samples in a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "[u64; 2]", into = "[u64; 2]")]
pub struct ClassCounts {
    pub zeros: u64,
    pub ones: u64,
}

impl From<[u64; 2]> for ClassCounts {
    fn from([zeros, ones]: [u64; 2]) -> Self {
        ClassCounts { zeros, ones }
    }
}

impl From<ClassCounts> for [u64; 2] {
    fn from(c: ClassCounts) -> Self {
        [c.zeros, c.ones]
    }
}

impl ClassCounts {
    pub fn new(zeros: u64, ones: u64) -> Self {
        ClassCounts { zeros, ones }
    }

    pub fn total(&self) -> u64 {
        self.zeros + self.ones
    }

    /// Majority class; a tie predicts 0.
    pub fn majority(&self) -> u8 {
        u8::from(self.ones > self.zeros)
    }

    fn add(&mut self, label: u8) {
        if label == 0 {
            self.zeros += 1;
        } else {
            self.ones += 1;
        }
    }

    fn minus(&self, other: &ClassCounts) -> ClassCounts {
        ClassCounts {
            zeros: self.zeros - other.zeros,
            ones: self.ones - other.ones,
        }
    }

    fn is_pure(&self) -> bool {
        self.zeros == 0 || self.ones == 0
    }
}

/// `1 - p0^2 - p1^2`, evaluated as the equivalent `2 * p0 * p1` so that
/// swapping the class labels gives bit-identical impurities.
pub fn gini(counts: ClassCounts) -> Result<f64> {
    let n = counts.total();
    if n == 0 {
        return Err(Error::InvalidInput("gini of an empty node".into()));
    }
    let p0 = counts.zeros as f64 / n as f64;
    let p1 = counts.ones as f64 / n as f64;
    Ok(2.0 * p0 * p1)
}

/// Impurity decrease of splitting `left + right`. Exactly 0 when both
/// children carry the parent's class mix; both sides must be non-empty.
pub fn split_gain(left: ClassCounts, right: ClassCounts) -> f64 {
    let parent = ClassCounts::new(left.zeros + right.zeros, left.ones + right.ones);
    let (n, nl, nr) = (parent.total(), left.total(), right.total());
    debug_assert!(nl > 0 && nr > 0);
    if u128::from(left.ones) * u128::from(n) == u128::from(parent.ones) * u128::from(nl) {
        return 0.0;
    }
    let g = |c| gini(c).expect("non-empty node");
    g(parent) - (nl as f64 / n as f64) * g(left) - (nr as f64 / n as f64) * g(right)
}

/// Column-major training data with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    columns: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

pub(crate) fn check_feature_names<S: AsRef<str>>(names: &[S]) -> Result<()> {
    if names.is_empty() || names.len() > FEATURE_COUNT {
        return Err(Error::Model(format!(
            "expected between 1 and {FEATURE_COUNT} feature names, got {}",
            names.len()
        )));
    }
    let mut seen = BTreeSet::new();
    for name in names {
        let name = name.as_ref();
        if feature_index(name).is_none() {
            return Err(Error::Model(format!("unknown feature name {name:?}")));
        }
        if !seen.insert(name) {
            return Err(Error::Model(format!("duplicate feature name {name:?}")));
        }
    }
    Ok(())
}

impl Dataset {
    /// `feature_names` must be distinct members of the nine model features.
    pub fn new(feature_names: Vec<String>, columns: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        check_feature_names(&feature_names)?;
        if columns.len() != feature_names.len() {
            return Err(Error::InvalidInput(format!(
                "{} columns for {} feature names",
                columns.len(),
                feature_names.len()
            )));
        }
        if labels.is_empty() {
            return Err(Error::InvalidInput("empty training set".into()));
        }
        for (name, col) in feature_names.iter().zip(&columns) {
            if col.len() != labels.len() {
                return Err(Error::InvalidInput(format!(
                    "feature {name} has {} rows but there are {} labels",
                    col.len(),
                    labels.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("feature {name} has a non-finite value")));
            }
        }
        if labels.iter().any(|l| *l > 1) {
            return Err(Error::InvalidInput("labels must be 0 or 1".into()));
        }
        Ok(Dataset {
            feature_names,
            columns,
            labels,
        })
    }

    /// Row-major convenience constructor.
    pub fn from_rows(feature_names: &[&str], rows: &[Vec<f64>], labels: &[u8]) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != feature_names.len()) {
            return Err(Error::InvalidInput(format!(
                "row has {} values, expected {}",
                r.len(),
                feature_names.len()
            )));
        }
        let columns = (0..feature_names.len())
            .map(|k| rows.iter().map(|r| r[k]).collect())
            .collect();
        Dataset::new(
            feature_names.iter().map(|s| s.to_string()).collect(),
            columns,
            labels.to_vec(),
        )
    }

    /// All nine columns, truncated to the labelled rows.
    pub fn from_features(features: &FeatureMatrix, labels: &LabelVector) -> Result<Self> {
        let n = labels.len();
        if n > features.len() || features.index()[..n] != labels.index[..] {
            return Err(Error::InvalidInput(format!(
                "{}: labels do not line up with feature rows",
                features.symbol()
            )));
        }
        let columns = features.columns().iter().map(|c| c[..n].to_vec()).collect();
        Dataset::new(
            FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            columns,
            labels.values.clone(),
        )
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    fn counts(&self, rows: &[usize]) -> ClassCounts {
        let mut c = ClassCounts::default();
        for &r in rows {
            c.add(self.labels[r]);
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    // adjacent floats: keep `hi` on the right
    if mid >= hi {
        lo
    } else {
        mid
    }
}

/// Best `(feature, threshold)` over the given rows, or `None` when no
/// candidate beats `config.min_gain`.
pub fn best_split(data: &Dataset, rows: &[usize], config: &TrainConfig) -> Option<Split> {
    if rows.len() < config.min_samples_split.max(2) {
        return None;
    }
    let parent = data.counts(rows);
    let mut best: Option<Split> = None;
    let mut order = rows.to_vec();
    for (feature, column) in data.columns.iter().enumerate() {
        order.sort_by(|a, b| column[*a].total_cmp(&column[*b]));
        let mut left = ClassCounts::default();
        for w in 0..order.len() - 1 {
            left.add(data.labels[order[w]]);
            let (lo, hi) = (column[order[w]], column[order[w + 1]]);
            if lo == hi {
                continue;
            }
            let gain = split_gain(left, parent.minus(&left));
            let beats_floor = gain > config.min_gain;
            let beats_best = best.is_none_or(|b| gain > b.gain);
            if beats_floor && beats_best {
                best = Some(Split {
                    feature,
                    threshold: midpoint(lo, hi),
                    gain,
                });
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        counts: ClassCounts,
        prediction: u8,
    },
}

impl TreeNode {
    pub fn leaf(counts: ClassCounts) -> Self {
        TreeNode::Leaf {
            counts,
            prediction: counts.majority(),
        }
    }

    /// Levels below this node (a leaf has depth 0).
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn internal_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.internal_count() + right.internal_count(),
        }
    }

    /// Routes a row (one value per model feature) to its leaf.
    pub fn route(&self, row: &[f64]) -> &TreeNode {
        let mut node = self;
        while let TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } = node
        {
            node = if row[*feature] <= *threshold { left } else { right };
        }
        node
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTreeModel {
    pub feature_names: Vec<String>,
    pub config: TrainConfig,
    pub train_range: Option<TimeRange>,
    pub root: TreeNode,
}

impl DecisionTreeModel {
    pub fn leaf_for(&self, row: &[f64]) -> Result<&TreeNode> {
        if row.len() != self.feature_names.len() {
            return Err(Error::InvalidInput(format!(
                "row has {} values, model expects {}",
                row.len(),
                self.feature_names.len()
            )));
        }
        if let Some(k) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "feature {} is not finite ({})",
                self.feature_names[k], row[k]
            )));
        }
        Ok(self.root.route(row))
    }

    /// One prediction per row of a full nine-column feature matrix.
    pub fn predict_matrix(&self, features: &FeatureMatrix) -> Result<Vec<u8>> {
        let cols: Vec<&[f64]> = self
            .feature_names
            .iter()
            .map(|name| {
                features
                    .column(name)
                    .ok_or_else(|| Error::Model(format!("feature matrix lacks {name}")))
            })
            .collect::<Result<_>>()?;
        let mut row = vec![0.0; cols.len()];
        (0..features.len())
            .map(|i| {
                for (slot, col) in row.iter_mut().zip(&cols) {
                    *slot = col[i];
                }
                predict(self, &row)
            })
            .collect()
    }
}

/// Grows a tree: a node becomes a leaf when it is pure, sits at `max_depth`,
/// holds fewer than `min_samples_split` rows, or has no acceptable split.
pub fn fit(data: &Dataset, config: &TrainConfig) -> Result<DecisionTreeModel> {
    config.validate()?;
    let rows: Vec<usize> = (0..data.len()).collect();
    let root = grow(data, rows, 0, config);
    Ok(DecisionTreeModel {
        feature_names: data.feature_names.clone(),
        config: *config,
        train_range: None,
        root,
    })
}

fn grow(data: &Dataset, rows: Vec<usize>, depth: usize, config: &TrainConfig) -> TreeNode {
    let counts = data.counts(&rows);
    if counts.is_pure() || depth >= config.max_depth || rows.len() < config.min_samples_split {
        return TreeNode::leaf(counts);
    }
    let Some(split) = best_split(data, &rows, config) else {
        return TreeNode::leaf(counts);
    };
    let column = &data.columns[split.feature];
    let (left, right): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&r| column[r] <= split.threshold);
    TreeNode::Internal {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow(data, left, depth + 1, config)),
        right: Box::new(grow(data, right, depth + 1, config)),
    }
}

pub fn predict(model: &DecisionTreeModel, row: &[f64]) -> Result<u8> {
    match model.leaf_for(row)? {
        TreeNode::Leaf { prediction, .. } => Ok(*prediction),
        TreeNode::Internal { .. } => unreachable!("route ends at a leaf"),
    }
}

/// Names of the features used by at least one internal node, in model order.
pub fn feature_usage(model: &DecisionTreeModel) -> BTreeSet<String> {
    fn walk(node: &TreeNode, names: &[String], out: &mut BTreeSet<String>) {
        if let TreeNode::Internal {
            feature, left, right, ..
        } = node
        {
            out.insert(names[*feature].clone());
            walk(left, names, out);
            walk(right, names, out);
        }
    }
    let mut out = BTreeSet::new();
    walk(&model.root, &model.feature_names, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_feature(values: &[f64], labels: &[u8]) -> Dataset {
        let rows: Vec<Vec<f64>> = values.iter().map(|v| vec![*v]).collect();
        Dataset::from_rows(&["ret_1"], &rows, labels).unwrap()
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(ClassCounts::new(10, 0)).unwrap(), 0.0);
        assert_eq!(gini(ClassCounts::new(5, 5)).unwrap(), 0.5);
        assert_eq!(gini(ClassCounts::new(3, 1)).unwrap(), 0.375);
        assert!(gini(ClassCounts::new(0, 0)).is_err());
        for (a, b) in [(2, 1), (7, 3), (1, 99)] {
            assert_eq!(
                gini(ClassCounts::new(a, b)).unwrap(),
                gini(ClassCounts::new(b, a)).unwrap()
            );
        }
    }

    #[test]
    fn proportional_children_have_zero_gain() {
        assert_eq!(split_gain(ClassCounts::new(1, 1), ClassCounts::new(2, 2)), 0.0);
        assert_eq!(split_gain(ClassCounts::new(1, 2), ClassCounts::new(3, 6)), 0.0);
        assert!(split_gain(ClassCounts::new(2, 0), ClassCounts::new(0, 2)) == 0.5);
    }

    #[test]
    fn perfect_split() {
        let d = one_feature(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]);
        let s = best_split(&d, &[0, 1, 2, 3], &TrainConfig::default()).unwrap();
        assert_eq!((s.feature, s.threshold, s.gain), (0, 2.5, 0.5));
    }

    #[test]
    fn xor_has_no_split() {
        let rows = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let d = Dataset::from_rows(&["ret_1", "ret_15"], &rows, &[0, 1, 1, 0]).unwrap();
        assert!(best_split(&d, &[0, 1, 2, 3], &TrainConfig::default()).is_none());
        let m = fit(&d, &TrainConfig::default()).unwrap();
        assert_eq!(m.root, TreeNode::leaf(ClassCounts::new(2, 2)));
        assert_eq!(predict(&m, &[0.0, 1.0]).unwrap(), 0);
    }

    #[test]
    fn ties_prefer_lowest_feature_then_threshold() {
        // Both features separate the classes identically.
        let rows = vec![vec![1.0, 10.0], vec![2.0, 20.0], vec![3.0, 30.0], vec![4.0, 40.0]];
        let d = Dataset::from_rows(&["ret_1", "ret_15"], &rows, &[0, 1, 0, 1]).unwrap();
        let s = best_split(&d, &[0, 1, 2, 3], &TrainConfig::default()).unwrap();
        assert_eq!(s.feature, 0);
        // thresholds 1.5 and 3.5 give the same gain; 1.5 wins
        assert_eq!(s.threshold, 1.5);
    }

    #[test]
    fn min_gain_is_strict() {
        let d = one_feature(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]);
        let cfg = TrainConfig {
            min_gain: 0.5,
            ..TrainConfig::default()
        };
        assert!(best_split(&d, &[0, 1, 2, 3], &cfg).is_none());
    }

    #[test]
    fn fit_stops_on_purity() {
        let d = one_feature(&[1.0, 2.0, 3.0], &[1, 1, 1]);
        let m = fit(&d, &TrainConfig::default()).unwrap();
        assert_eq!(m.root, TreeNode::leaf(ClassCounts::new(0, 3)));
        assert!(feature_usage(&m).is_empty());
    }

    #[test]
    fn depth_one_fit() {
        let d = one_feature(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]);
        let m = fit(&d, &TrainConfig::with_depth(1)).unwrap();
        let TreeNode::Internal {
            threshold, left, right, ..
        } = &m.root
        else {
            panic!("expected a split");
        };
        assert_eq!(*threshold, 2.5);
        assert_eq!(**left, TreeNode::leaf(ClassCounts::new(2, 0)));
        assert_eq!(**right, TreeNode::leaf(ClassCounts::new(0, 2)));
        assert_eq!(feature_usage(&m).len(), 1);
        assert_eq!(predict(&m, &[2.5]).unwrap(), 0);
        assert_eq!(predict(&m, &[2.6]).unwrap(), 1);
    }

    #[test]
    fn min_samples_split_respected() {
        let d = one_feature(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]);
        let cfg = TrainConfig {
            min_samples_split: 5,
            ..TrainConfig::default()
        };
        assert!(matches!(fit(&d, &cfg).unwrap().root, TreeNode::Leaf { .. }));
    }

    #[test]
    fn adjacent_floats_keep_partition() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let d = one_feature(&[a, b], &[0, 1]);
        let s = best_split(&d, &[0, 1], &TrainConfig::default()).unwrap();
        assert!(a <= s.threshold && b > s.threshold);
    }

    #[test]
    fn leaf_tie_predicts_zero() {
        assert_eq!(
            TreeNode::leaf(ClassCounts::new(3, 3)),
            TreeNode::Leaf {
                counts: ClassCounts::new(3, 3),
                prediction: 0
            }
        );
    }

    #[test]
    fn input_errors() {
        assert!(Dataset::from_rows(&["ret_1"], &[], &[]).is_err());
        assert!(Dataset::from_rows(&["ret_1"], &[vec![1.0]], &[0, 1]).is_err());
        assert!(Dataset::from_rows(&["bogus"], &[vec![1.0]], &[0]).is_err());
        assert!(Dataset::from_rows(&["ret_1", "ret_1"], &[vec![1.0, 1.0]], &[0]).is_err());
        let d = one_feature(&[1.0, 2.0], &[0, 1]);
        let m = fit(&d, &TrainConfig::default()).unwrap();
        assert!(predict(&m, &[f64::NAN]).is_err());
        assert!(predict(&m, &[1.0, 2.0]).is_err());
        assert!(fit(&d, &TrainConfig::with_depth(0)).is_err());
    }
}
