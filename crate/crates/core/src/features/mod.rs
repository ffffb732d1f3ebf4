//! The nine model inputs and the next-bar direction label.

pub mod indicators;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use indicators::{
    adx, first_defined, rolling_volatility, rsi, simple_returns, sma, sma_close_corr, sma_close_ratio, vwap_close_ratio,
};

use crate::data::AlignedPanel;
use crate::error::{Error, Result};
use crate::timefmt::{format_f64, format_ts, parse_ts, Timestamp};

/// Column names in model order.
pub const FEATURE_NAMES: [&str; 9] = [
    "ret_1",
    "ret_15",
    "rsi_14",
    "adx_14",
    "sma_close_ratio",
    "sma_close_corr",
    "vol_14",
    "vol_210",
    "vwap_close_ratio",
];

pub const FEATURE_COUNT: usize = FEATURE_NAMES.len();

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

/// Indicator periods. The defaults are the model's reference setup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSpec {
    pub return_lag_short: usize,
    pub return_lag_medium: usize,
    pub rsi_period: usize,
    pub adx_period: usize,
    pub sma_period: usize,
    pub corr_period: usize,
    pub vol_period: usize,
    pub vwap_period: usize,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            return_lag_short: 1,
            return_lag_medium: 15,
            rsi_period: 14,
            adx_period: 14,
            sma_period: 14,
            corr_period: 14,
            vol_period: 14,
            vwap_period: 14,
        }
    }
}

impl FeatureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.return_lag_short < 1 || self.return_lag_medium < 1 {
            return Err(Error::InvalidInput("return lags must be at least 1".into()));
        }
        let periods = [
            ("rsi_period", self.rsi_period),
            ("adx_period", self.adx_period),
            ("sma_period", self.sma_period),
            ("corr_period", self.corr_period),
            ("vol_period", self.vol_period),
            ("vwap_period", self.vwap_period),
        ];
        if let Some((name, p)) = periods.iter().find(|(_, p)| *p < 2) {
            return Err(Error::InvalidInput(format!("{name} must be at least 2, got {p}")));
        }
        Ok(())
    }

    /// First-defined offset of each column, in [`FEATURE_NAMES`] order.
    pub fn column_offsets(&self) -> [usize; FEATURE_COUNT] {
        [
            self.return_lag_short,
            self.return_lag_medium,
            self.rsi_period,
            2 * self.adx_period - 1,
            self.sma_period - 1,
            2 * self.corr_period - 2,
            self.return_lag_short + self.vol_period - 1,
            self.return_lag_medium + self.vol_period - 1,
            self.vwap_period - 1,
        ]
    }

    /// Rows dropped from the front of every symbol.
    pub fn warmup(&self) -> usize {
        self.column_offsets().into_iter().max().unwrap_or(0)
    }
}

/// Nine feature columns over the retained (fully defined) rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    symbol: String,
    index: Vec<Timestamp>,
    columns: [Vec<f64>; FEATURE_COUNT],
    warmup_length: usize,
}

impl FeatureMatrix {
    pub fn new(
        symbol: impl Into<String>,
        index: Vec<Timestamp>,
        columns: [Vec<f64>; FEATURE_COUNT],
        warmup_length: usize,
    ) -> Result<Self> {
        let n = index.len();
        for (name, col) in FEATURE_NAMES.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::InvalidInput(format!(
                    "column {name} has {} rows, index has {n}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "column {name} contains a non-finite value"
                )));
            }
        }
        Ok(FeatureMatrix {
            symbol: symbol.into(),
            index,
            columns,
            warmup_length,
        })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn index(&self) -> &[Timestamp] {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn warmup_length(&self) -> usize {
        self.warmup_length
    }

    pub fn columns(&self) -> &[Vec<f64>; FEATURE_COUNT] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        feature_index(name).map(|i| self.columns[i].as_slice())
    }

    pub fn row(&self, i: usize) -> [f64; FEATURE_COUNT] {
        std::array::from_fn(|k| self.columns[k][i])
    }

    /// The first `n` rows.
    pub fn head(&self, n: usize) -> FeatureMatrix {
        let n = n.min(self.len());
        FeatureMatrix {
            symbol: self.symbol.clone(),
            index: self.index[..n].to_vec(),
            columns: std::array::from_fn(|k| self.columns[k][..n].to_vec()),
            warmup_length: self.warmup_length,
        }
    }
}

/// Binary next-bar direction: 1 when the following close is higher.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    pub symbol: String,
    pub index: Vec<Timestamp>,
    pub values: Vec<u8>,
}

impl LabelVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Computes the nine columns for one symbol and drops the warm-up rows.
/// Values are used raw; nothing is scaled.
pub fn build_features(panel: &AlignedPanel, symbol: &str, spec: &FeatureSpec) -> Result<FeatureMatrix> {
    spec.validate()?;
    let cols = panel
        .get(symbol)
        .ok_or_else(|| Error::InvalidInput(format!("symbol {symbol} not in panel")))?;
    let needed = spec.warmup() + 1;
    if panel.len() < needed {
        return Err(Error::TooShort {
            what: "build_features",
            needed,
            got: panel.len(),
        });
    }
    let close = &cols.close;
    let ret_short = simple_returns(close, spec.return_lag_short)?;
    let ret_medium = simple_returns(close, spec.return_lag_medium)?;
    let full: [Vec<f64>; FEATURE_COUNT] = [
        ret_short.clone(),
        ret_medium.clone(),
        rsi(close, spec.rsi_period)?,
        adx(&cols.high, &cols.low, close, spec.adx_period)?,
        sma_close_ratio(close, spec.sma_period)?,
        sma_close_corr(close, spec.corr_period)?,
        rolling_volatility(&ret_short, spec.vol_period)?,
        rolling_volatility(&ret_medium, spec.vol_period)?,
        vwap_close_ratio(&cols.high, &cols.low, close, &cols.volume, spec.vwap_period)?,
    ];
    let warmup = full
        .iter()
        .map(|c| first_defined(c).unwrap_or(c.len()))
        .max()
        .unwrap_or(0);
    if warmup >= panel.len() {
        return Err(Error::TooShort {
            what: "build_features",
            needed: warmup + 1,
            got: panel.len(),
        });
    }
    let columns = full.map(|c| c[warmup..].to_vec());
    FeatureMatrix::new(symbol, panel.index()[warmup..].to_vec(), columns, warmup)
}

/// Labels each feature row with the sign of the next close-to-close return
/// (zero maps to 0). A row sitting on the last price bar has no successor and
/// gets no label, so the result may be one shorter than `feature_index`.
pub fn build_labels(
    symbol: &str,
    close: &[f64],
    close_index: &[Timestamp],
    feature_index: &[Timestamp],
) -> Result<LabelVector> {
    if close.len() != close_index.len() {
        return Err(Error::InvalidInput("close and index lengths differ".into()));
    }
    let mut index = Vec::with_capacity(feature_index.len());
    let mut values = Vec::with_capacity(feature_index.len());
    let mut pos = 0usize;
    for ts in feature_index {
        while pos < close_index.len() && close_index[pos] < *ts {
            pos += 1;
        }
        if pos == close_index.len() || close_index[pos] != *ts {
            return Err(Error::InvalidInput(format!(
                "feature timestamp {} not in price index",
                format_ts(ts)
            )));
        }
        let Some(next) = close.get(pos + 1) else {
            break;
        };
        index.push(*ts);
        values.push(u8::from(next / close[pos] - 1.0 > 0.0));
    }
    Ok(LabelVector {
        symbol: symbol.to_string(),
        index,
        values,
    })
}

const TIMESTAMP_COL: &str = "timestamp";
const LABEL_COL: &str = "label";

/// Writes `timestamp,<nine features>[,label]`. Rows past the end of `labels`
/// get an empty label cell.
pub fn write_feature_csv(path: impl AsRef<Path>, features: &FeatureMatrix, labels: Option<&LabelVector>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(features.len() * 160);
    out.push_str(TIMESTAMP_COL);
    for name in FEATURE_NAMES {
        out.push(',');
        out.push_str(name);
    }
    if labels.is_some() {
        out.push_str(",label");
    }
    out.push('\n');
    for i in 0..features.len() {
        out.push_str(&format_ts(&features.index[i]));
        for col in &features.columns {
            out.push(',');
            out.push_str(&format_f64(col[i]));
        }
        if let Some(labels) = labels {
            out.push(',');
            if let Some(v) = labels.values.get(i) {
                let _ = write!(out, "{v}");
            }
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a feature CSV. Returns the matrix (warm-up length unknown, set to 0)
/// and the labels when the column is present.
pub fn read_feature_csv(path: impl AsRef<Path>, symbol: &str) -> Result<(FeatureMatrix, Option<LabelVector>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let mut expected: Vec<&str> = std::iter::once(TIMESTAMP_COL).chain(FEATURE_NAMES).collect();
    let has_label = header.len() == expected.len() + 1;
    if has_label {
        expected.push(LABEL_COL);
    }
    if header != expected {
        return Err(Error::parse(
            path,
            1,
            format!("unexpected header {:?}", header.join(",")),
        ));
    }
    let mut index = Vec::new();
    let mut columns: [Vec<f64>; FEATURE_COUNT] = Default::default();
    let mut label_index = Vec::new();
    let mut label_values = Vec::new();
    for (n, line) in lines.enumerate() {
        let line_no = n as u64 + 2;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != expected.len() {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected {} cells, found {}", expected.len(), cells.len()),
            ));
        }
        let ts = parse_ts(cells[0]).map_err(|e| Error::parse(path, line_no, format!("bad timestamp: {e}")))?;
        for (k, col) in columns.iter_mut().enumerate() {
            col.push(
                cells[k + 1]
                    .parse()
                    .map_err(|e| Error::parse(path, line_no, format!("bad {}: {e}", FEATURE_NAMES[k])))?,
            );
        }
        if has_label {
            match cells[FEATURE_COUNT + 1] {
                "" => {}
                "0" | "1" => {
                    label_index.push(ts);
                    label_values.push(u8::from(cells[FEATURE_COUNT + 1] == "1"));
                }
                other => return Err(Error::parse(path, line_no, format!("bad label {other:?}"))),
            }
        }
        index.push(ts);
    }
    let features = FeatureMatrix::new(symbol, index, columns, 0)?;
    let labels = has_label.then(|| LabelVector {
        symbol: symbol.to_string(),
        index: label_index,
        values: label_values,
    });
    Ok((features, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{union_align, Bar, BarSeries};

    fn panel_from_closes(closes: &[f64]) -> AlignedPanel {
        let start = parse_ts("2023-01-02T09:15:00+05:30").unwrap();
        let bars = closes
            .iter()
            .enumerate()
            .map(|(i, c)| Bar {
                timestamp: start + chrono::Duration::minutes(i as i64),
                open: *c,
                high: c * 1.001,
                low: c * 0.999,
                close: *c,
                volume: 100.0 + i as f64,
            })
            .collect();
        union_align(&[BarSeries::new("S", bars).unwrap()]).unwrap()
    }

    #[test]
    fn default_spec_warmup_is_vol_210() {
        let spec = FeatureSpec::default();
        assert_eq!(spec.column_offsets(), [1, 15, 14, 27, 13, 26, 14, 28, 13]);
        assert_eq!(spec.warmup(), 28);
    }

    #[test]
    fn spec_validation() {
        let spec = FeatureSpec {
            rsi_period: 1,
            ..Default::default()
        };
        assert!(spec.validate().is_err());
        let spec = FeatureSpec {
            return_lag_short: 0,
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn warmup_matches_offsets_and_rows_are_finite() {
        let closes: Vec<f64> = (0..80).map(|i| 100.0 + (i as f64 * 0.7).sin()).collect();
        let panel = panel_from_closes(&closes);
        let m = build_features(&panel, "S", &FeatureSpec::default()).unwrap();
        assert_eq!(m.warmup_length(), 28);
        assert_eq!(m.len(), 80 - 28);
        assert_eq!(m.index()[0], panel.index()[28]);
        for i in 0..m.len() {
            assert!(m.row(i).iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn too_short_panel_errors() {
        let panel = panel_from_closes(&[100.0; 28]);
        assert!(build_features(&panel, "S", &FeatureSpec::default()).is_err());
        let panel = panel_from_closes(&[100.0; 29]);
        assert_eq!(build_features(&panel, "S", &FeatureSpec::default()).unwrap().len(), 1);
        assert!(build_features(&panel, "NOPE", &FeatureSpec::default()).is_err());
    }

    #[test]
    fn labels_sign_rule() {
        let idx: Vec<Timestamp> = panel_from_closes(&[1.0; 3]).index().to_vec();
        let l = build_labels("S", &[100.0, 101.0, 100.0], &idx, &idx).unwrap();
        assert_eq!(l.values, vec![1, 0]);
        assert_eq!(l.index, idx[..2].to_vec());
        let flat = build_labels("S", &[5.0; 3], &idx, &idx).unwrap();
        assert_eq!(flat.values, vec![0, 0]);
        // A feature index ending before the last price bar keeps every row.
        let l = build_labels("S", &[100.0, 101.0, 100.0], &idx, &idx[..2]).unwrap();
        assert_eq!(l.values, vec![1, 0]);
    }

    #[test]
    fn labels_reject_foreign_timestamp() {
        let idx: Vec<Timestamp> = panel_from_closes(&[1.0; 3]).index().to_vec();
        let other = vec![idx[0] + chrono::Duration::seconds(30)];
        assert!(build_labels("S", &[1.0, 2.0, 3.0], &idx, &other).is_err());
    }

    #[test]
    fn feature_csv_round_trip() {
        let closes: Vec<f64> = (0..60).map(|i| 100.0 + (i as f64 * 0.3).cos() * 2.0).collect();
        let panel = panel_from_closes(&closes);
        let m = build_features(&panel, "S", &FeatureSpec::default()).unwrap();
        let labels = build_labels("S", &panel.get("S").unwrap().close, panel.index(), m.index()).unwrap();
        assert_eq!(labels.len(), m.len() - 1);
        let f = tempfile::NamedTempFile::new().unwrap();
        write_feature_csv(f.path(), &m, Some(&labels)).unwrap();
        let (back, back_labels) = read_feature_csv(f.path(), "S").unwrap();
        assert_eq!(back.columns(), m.columns());
        assert_eq!(back.index(), m.index());
        assert_eq!(back_labels.unwrap(), labels);

        write_feature_csv(f.path(), &m, None).unwrap();
        let (_, none) = read_feature_csv(f.path(), "S").unwrap();
        assert!(none.is_none());
    }
}
