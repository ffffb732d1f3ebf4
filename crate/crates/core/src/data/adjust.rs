use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;

use super::bars::{open_csv, read_headers, BarSeries};
use crate::error::{Error, Result};

const DAILY_HEADER: [&str; 3] = ["date", "close", "adjusted_close"];

/// Raw and adjusted daily closes keyed by trading day.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DailyCloses {
    pub close: BTreeMap<NaiveDate, f64>,
    pub adjusted_close: BTreeMap<NaiveDate, f64>,
}

/// Per-trading-day ratio `adjusted_close / close`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjustmentFactorSeries {
    symbol: String,
    entries: Vec<(NaiveDate, f64)>,
}

impl AdjustmentFactorSeries {
    pub fn new(symbol: impl Into<String>, entries: Vec<(NaiveDate, f64)>) -> Result<Self> {
        if let Some((d, f)) = entries.iter().find(|(_, f)| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::Adjustment(format!("factor on {d} must be positive, got {f}")));
        }
        if let Some(w) = entries.windows(2).find(|w| w[0].0 >= w[1].0) {
            return Err(Error::Adjustment(format!(
                "dates not strictly increasing at {} -> {}",
                w[0].0, w[1].0
            )));
        }
        Ok(AdjustmentFactorSeries {
            symbol: symbol.into(),
            entries,
        })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn entries(&self) -> &[(NaiveDate, f64)] {
        &self.entries
    }

    pub fn factor(&self, date: NaiveDate) -> Option<f64> {
        self.entries
            .binary_search_by_key(&date, |(d, _)| *d)
            .ok()
            .map(|i| self.entries[i].1)
    }
}

/// Reads a daily `date,close,adjusted_close` CSV.
pub fn ingest_daily(path: impl AsRef<Path>) -> Result<DailyCloses> {
    let path = path.as_ref();
    let mut reader = open_csv(path)?;
    read_headers(path, &mut reader, &DAILY_HEADER)?;
    let mut out = DailyCloses::default();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let date = NaiveDate::parse_from_str(record[0].trim(), "%Y-%m-%d")
            .map_err(|e| Error::parse(path, line, format!("bad date {:?}: {e}", &record[0])))?;
        let num = |i: usize, name: &str| -> Result<f64> {
            record[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::parse(path, line, format!("bad {name} {:?}: {e}", &record[i])))
        };
        let close = num(1, "close")?;
        let adjusted = num(2, "adjusted_close")?;
        if out.close.insert(date, close).is_some() {
            return Err(Error::parse(path, line, format!("duplicate date {date}")));
        }
        out.adjusted_close.insert(date, adjusted);
    }
    Ok(out)
}

/// `factor(d) = adjusted_close(d) / close(d)` for every trading day.
pub fn compute_adjustment_factors(
    symbol: &str,
    daily_close: &BTreeMap<NaiveDate, f64>,
    daily_adjusted_close: &BTreeMap<NaiveDate, f64>,
) -> Result<AdjustmentFactorSeries> {
    if daily_close.len() != daily_adjusted_close.len() || daily_close.keys().ne(daily_adjusted_close.keys()) {
        let missing = daily_close
            .keys()
            .find(|d| !daily_adjusted_close.contains_key(d))
            .or_else(|| daily_adjusted_close.keys().find(|d| !daily_close.contains_key(d)));
        return Err(Error::Adjustment(format!(
            "{symbol}: close and adjusted close date sets differ (first mismatch {})",
            missing.map_or_else(|| "?".to_string(), |d| d.to_string())
        )));
    }
    let mut entries = Vec::with_capacity(daily_close.len());
    for ((date, close), adjusted) in daily_close.iter().zip(daily_adjusted_close.values()) {
        if !(close.is_finite() && *close > 0.0) {
            return Err(Error::Adjustment(format!(
                "{symbol}: close on {date} must be positive, got {close}"
            )));
        }
        if !(adjusted.is_finite() && *adjusted > 0.0) {
            return Err(Error::Adjustment(format!(
                "{symbol}: adjusted close on {date} must be positive, got {adjusted}"
            )));
        }
        entries.push((*date, adjusted / close));
    }
    AdjustmentFactorSeries::new(symbol, entries)
}

/// Scales each bar's prices by its trading day's factor and divides volume by
/// it. Every minute of a day shares that day's factor.
pub fn apply_adjustment(series: &BarSeries, factors: &AdjustmentFactorSeries) -> Result<BarSeries> {
    let mut bars = Vec::with_capacity(series.len());
    for bar in series.bars() {
        let date = bar.timestamp.date_naive();
        let f = factors
            .factor(date)
            .ok_or_else(|| Error::Adjustment(format!("{}: no adjustment factor for {date}", series.symbol())))?;
        let mut b = *bar;
        b.open *= f;
        b.high *= f;
        b.low *= f;
        b.close *= f;
        b.volume /= f;
        bars.push(b);
    }
    Ok(BarSeries::from_sorted(series.symbol().to_string(), bars))
}
