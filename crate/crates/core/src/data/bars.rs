use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timefmt::{format_f64, format_ts, parse_ts, Timestamp};

pub(crate) const BAR_HEADER: [&str; 6] = ["timestamp", "open", "high", "low", "close", "volume"];

/// One OHLCV bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub timestamp: Timestamp,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl Bar {
    /// Checks finiteness, positive prices, non-negative volume and the
    /// low/high envelope.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let prices = [
            ("open", self.open),
            ("high", self.high),
            ("low", self.low),
            ("close", self.close),
        ];
        for (name, v) in prices {
            if !v.is_finite() {
                return Err(format!("{name} is not finite"));
            }
            if v <= 0.0 {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if !self.volume.is_finite() || self.volume < 0.0 {
            return Err(format!("volume must be finite and non-negative, got {}", self.volume));
        }
        if self.low > self.high {
            return Err(format!("low {} exceeds high {}", self.low, self.high));
        }
        if self.low > self.open.min(self.close) {
            return Err(format!("low {} above min(open, close)", self.low));
        }
        if self.high < self.open.max(self.close) {
            return Err(format!("high {} below max(open, close)", self.high));
        }
        Ok(())
    }
}

/// Time-ordered bars of one symbol. Timestamps are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct BarSeries {
    symbol: String,
    bars: Vec<Bar>,
}

impl BarSeries {
    /// Sorts by timestamp, collapses duplicate timestamps (the last record in
    /// input order wins) and validates every bar.
    pub fn new(symbol: impl Into<String>, mut bars: Vec<Bar>) -> Result<Self> {
        for bar in &bars {
            bar.validate().map_err(|message| Error::InvalidBar {
                timestamp: format_ts(&bar.timestamp),
                message,
            })?;
        }
        bars.sort_by_key(|b| b.timestamp);
        let mut out: Vec<Bar> = Vec::with_capacity(bars.len());
        for bar in bars {
            match out.last_mut() {
                Some(last) if last.timestamp == bar.timestamp => *last = bar,
                _ => out.push(bar),
            }
        }
        Ok(BarSeries {
            symbol: symbol.into(),
            bars: out,
        })
    }

    /// Builds from bars already known to be sorted and valid.
    pub(crate) fn from_sorted(symbol: String, bars: Vec<Bar>) -> Self {
        debug_assert!(bars.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
        BarSeries { symbol, bars }
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.close).collect()
    }

    /// Bars whose timestamp lies in `[start, end)`.
    pub fn restrict(&self, start: &Timestamp, end: &Timestamp) -> BarSeries {
        let bars = self
            .bars
            .iter()
            .filter(|b| b.timestamp >= *start && b.timestamp < *end)
            .copied()
            .collect();
        BarSeries::from_sorted(self.symbol.clone(), bars)
    }
}

fn parse_field(path: &Path, line: u64, name: &str, text: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .map_err(|e| Error::parse(path, line, format!("bad {name} value {text:?}: {e}")))
}

fn check_header(path: &Path, headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let found: Vec<&str> = headers.iter().map(str::trim).collect();
    if found != expected {
        return Err(Error::parse(
            path,
            1,
            format!("expected header {:?}, found {:?}", expected.join(","), found.join(",")),
        ));
    }
    Ok(())
}

pub(crate) fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

pub(crate) fn read_headers(path: &Path, reader: &mut csv::Reader<File>, expected: &[&str]) -> Result<()> {
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    check_header(path, &headers, expected)
}

/// Reads a per-symbol bar CSV (`timestamp,open,high,low,close,volume`).
///
/// Rows may arrive unsorted; duplicates keep the last row. Any malformed or
/// invalid row fails the whole read with its line number.
pub fn ingest_bars(path: impl AsRef<Path>, symbol: &str) -> Result<BarSeries> {
    let path = path.as_ref();
    let mut reader = open_csv(path)?;
    read_headers(path, &mut reader, &BAR_HEADER)?;
    let mut bars = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let timestamp = parse_ts(&record[0])
            .map_err(|e| Error::parse(path, line, format!("bad timestamp {:?}: {e}", &record[0])))?;
        let bar = Bar {
            timestamp,
            open: parse_field(path, line, "open", &record[1])?,
            high: parse_field(path, line, "high", &record[2])?,
            low: parse_field(path, line, "low", &record[3])?,
            close: parse_field(path, line, "close", &record[4])?,
            volume: parse_field(path, line, "volume", &record[5])?,
        };
        bar.validate().map_err(|m| Error::parse(path, line, m))?;
        bars.push(bar);
    }
    BarSeries::new(symbol, bars)
}

pub fn write_bars(path: impl AsRef<Path>, series: &BarSeries) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(series.len() * 64);
    out.push_str(&BAR_HEADER.join(","));
    out.push('\n');
    for b in series.bars() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_ts(&b.timestamp),
            format_f64(b.open),
            format_f64(b.high),
            format_f64(b.low),
            format_f64(b.close),
            format_f64(b.volume)
        ));
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
