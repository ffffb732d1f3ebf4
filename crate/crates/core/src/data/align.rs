use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::bars::{open_csv, read_headers, Bar, BarSeries};
use crate::error::{Error, Result};
use crate::timefmt::{format_f64, format_ts, parse_ts, Timestamp};

const SYMBOL_HEADER: [&str; 6] = ["open", "high", "low", "close", "volume", "interpolated"];
const INDEX_FILE: &str = "index.csv";

/// Column block of one symbol inside an [`AlignedPanel`].
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolColumns {
    pub symbol: String,
    pub open: Vec<f64>,
    pub high: Vec<f64>,
    pub low: Vec<f64>,
    pub close: Vec<f64>,
    pub volume: Vec<f64>,
    /// `true` where the raw series had no bar at that index timestamp.
    pub interpolated: Vec<bool>,
}

impl SymbolColumns {
    fn with_capacity(symbol: &str, n: usize) -> Self {
        SymbolColumns {
            symbol: symbol.to_string(),
            open: Vec::with_capacity(n),
            high: Vec::with_capacity(n),
            low: Vec::with_capacity(n),
            close: Vec::with_capacity(n),
            volume: Vec::with_capacity(n),
            interpolated: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, values: [f64; 5], filled: bool) {
        self.open.push(values[0]);
        self.high.push(values[1]);
        self.low.push(values[2]);
        self.close.push(values[3]);
        self.volume.push(values[4]);
        self.interpolated.push(filled);
    }

    fn select(&self, rows: std::ops::Range<usize>) -> SymbolColumns {
        SymbolColumns {
            symbol: self.symbol.clone(),
            open: self.open[rows.clone()].to_vec(),
            high: self.high[rows.clone()].to_vec(),
            low: self.low[rows.clone()].to_vec(),
            close: self.close[rows.clone()].to_vec(),
            volume: self.volume[rows.clone()].to_vec(),
            interpolated: self.interpolated[rows].to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.close.len()
    }

    pub fn is_empty(&self) -> bool {
        self.close.is_empty()
    }
}

/// Universe-wide panel on one shared, strictly increasing index. Symbols are
/// kept sorted by name.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPanel {
    index: Vec<Timestamp>,
    symbols: Vec<SymbolColumns>,
}

impl AlignedPanel {
    pub fn new(index: Vec<Timestamp>, mut symbols: Vec<SymbolColumns>) -> Result<Self> {
        if index.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Alignment("index is not strictly increasing".into()));
        }
        symbols.sort_by(|a, b| a.symbol.cmp(&b.symbol));
        if let Some(w) = symbols.windows(2).find(|w| w[0].symbol == w[1].symbol) {
            return Err(Error::Alignment(format!("duplicate symbol {}", w[0].symbol)));
        }
        for s in &symbols {
            let n = index.len();
            let lens = [
                s.open.len(),
                s.high.len(),
                s.low.len(),
                s.close.len(),
                s.volume.len(),
                s.interpolated.len(),
            ];
            if lens.iter().any(|&l| l != n) {
                return Err(Error::Alignment(format!(
                    "{}: column lengths {lens:?} do not match index length {n}",
                    s.symbol
                )));
            }
            let all = s
                .open
                .iter()
                .chain(&s.high)
                .chain(&s.low)
                .chain(&s.close)
                .chain(&s.volume);
            if all.clone().any(|v| !v.is_finite()) {
                return Err(Error::Alignment(format!("{}: missing or non-finite value", s.symbol)));
            }
        }
        Ok(AlignedPanel { index, symbols })
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

    pub fn symbols(&self) -> &[SymbolColumns] {
        &self.symbols
    }

    pub fn symbol_names(&self) -> Vec<&str> {
        self.symbols.iter().map(|s| s.symbol.as_str()).collect()
    }

    pub fn get(&self, symbol: &str) -> Option<&SymbolColumns> {
        self.symbols
            .binary_search_by(|s| s.symbol.as_str().cmp(symbol))
            .ok()
            .map(|i| &self.symbols[i])
    }

    /// Rows `[start, end)` of the index.
    pub fn slice_rows(&self, rows: std::ops::Range<usize>) -> AlignedPanel {
        AlignedPanel {
            index: self.index[rows.clone()].to_vec(),
            symbols: self.symbols.iter().map(|s| s.select(rows.clone())).collect(),
        }
    }

    /// The symbol's column block viewed as bars (panel cells are not
    /// re-validated, filled cells included).
    pub fn bar_series(&self, symbol: &str) -> Option<BarSeries> {
        let cols = self.get(symbol)?;
        let bars = self
            .index
            .iter()
            .enumerate()
            .map(|(i, ts)| Bar {
                timestamp: *ts,
                open: cols.open[i],
                high: cols.high[i],
                low: cols.low[i],
                close: cols.close[i],
                volume: cols.volume[i],
            })
            .collect();
        Some(BarSeries::from_sorted(symbol.to_string(), bars))
    }
}

fn bar_values(b: &Bar) -> [f64; 5] {
    [b.open, b.high, b.low, b.close, b.volume]
}

fn lerp_bounded(v0: f64, v1: f64, w: f64) -> f64 {
    let v = v0 + w * (v1 - v0);
    v.clamp(v0.min(v1), v0.max(v1))
}

/// Aligns every series onto the sorted union of their timestamps.
///
/// Missing cells are interpolated linearly in time between the nearest raw
/// neighbours, each column independently. Before the first or after the last
/// raw bar the nearest raw value is carried instead.
pub fn union_align(series_set: &[BarSeries]) -> Result<AlignedPanel> {
    if series_set.is_empty() {
        return Err(Error::Alignment("no series to align".into()));
    }
    if let Some(s) = series_set.iter().find(|s| s.is_empty()) {
        return Err(Error::Alignment(format!("{}: empty series", s.symbol())));
    }
    let index: Vec<Timestamp> = series_set
        .iter()
        .flat_map(|s| s.bars().iter().map(|b| b.timestamp))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let millis: Vec<i64> = index.iter().map(|t| t.timestamp_millis()).collect();

    let mut blocks = Vec::with_capacity(series_set.len());
    for series in series_set {
        let bars = series.bars();
        let mut cols = SymbolColumns::with_capacity(series.symbol(), index.len());
        // `next` is the first raw bar at or after the current index timestamp.
        let mut next = 0usize;
        for (i, ts) in index.iter().enumerate() {
            while next < bars.len() && bars[next].timestamp < *ts {
                next += 1;
            }
            if next < bars.len() && bars[next].timestamp == *ts {
                cols.push(bar_values(&bars[next]), false);
                continue;
            }
            let values = match (next.checked_sub(1).map(|p| &bars[p]), bars.get(next)) {
                (Some(prev), Some(after)) => {
                    let t0 = prev.timestamp.timestamp_millis();
                    let t1 = after.timestamp.timestamp_millis();
                    let w = (millis[i] - t0) as f64 / (t1 - t0) as f64;
                    let (a, b) = (bar_values(prev), bar_values(after));
                    std::array::from_fn(|k| lerp_bounded(a[k], b[k], w))
                }
                (Some(prev), None) => bar_values(prev),
                (None, Some(after)) => bar_values(after),
                (None, None) => unreachable!("series is non-empty"),
            };
            cols.push(values, true);
        }
        blocks.push(cols);
    }
    AlignedPanel::new(index, blocks)
}

/// Writes `index.csv` plus one `SYMBOL.csv` per symbol into `dir`.
pub fn write_panel(dir: impl AsRef<Path>, panel: &AlignedPanel) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut index = String::from("timestamp\n");
    for ts in &panel.index {
        index.push_str(&format_ts(ts));
        index.push('\n');
    }
    let path = dir.join(INDEX_FILE);
    fs::write(&path, index).map_err(|e| Error::io(&path, e))?;
    for s in &panel.symbols {
        let mut out = SYMBOL_HEADER.join(",");
        out.push('\n');
        for i in 0..s.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                format_f64(s.open[i]),
                format_f64(s.high[i]),
                format_f64(s.low[i]),
                format_f64(s.close[i]),
                format_f64(s.volume[i]),
                s.interpolated[i]
            ));
        }
        let path = dir.join(format!("{}.csv", s.symbol));
        fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Reads a panel directory written by [`write_panel`].
pub fn read_panel(dir: impl AsRef<Path>) -> Result<AlignedPanel> {
    let dir = dir.as_ref();
    let index_path = dir.join(INDEX_FILE);
    let mut reader = open_csv(&index_path)?;
    read_headers(&index_path, &mut reader, &["timestamp"])?;
    let mut index = Vec::new();
    for record in reader.records() {
        let record =
            record.map_err(|e| Error::parse(&index_path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        index.push(parse_ts(&record[0]).map_err(|e| Error::parse(&index_path, line, e.to_string()))?);
    }

    let mut names: Vec<String> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok())
        .filter_map(|entry| entry.file_name().into_string().ok())
        .filter(|name| name != INDEX_FILE)
        .filter_map(|name| name.strip_suffix(".csv").map(str::to_string))
        .collect();
    names.sort();

    let mut blocks = Vec::with_capacity(names.len());
    for name in names {
        let path = dir.join(format!("{name}.csv"));
        let mut reader = open_csv(&path)?;
        read_headers(&path, &mut reader, &SYMBOL_HEADER)?;
        let mut cols = SymbolColumns::with_capacity(&name, index.len());
        for record in reader.records() {
            let record =
                record.map_err(|e| Error::parse(&path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line());
            let mut values = [0.0; 5];
            for (k, v) in values.iter_mut().enumerate() {
                *v = record[k]
                    .parse()
                    .map_err(|e| Error::parse(&path, line, format!("bad {} value: {e}", SYMBOL_HEADER[k])))?;
            }
            let filled = record[5]
                .parse::<bool>()
                .map_err(|e| Error::parse(&path, line, format!("bad interpolated flag: {e}")))?;
            cols.push(values, filled);
        }
        blocks.push(cols);
    }
    AlignedPanel::new(index, blocks)
}
