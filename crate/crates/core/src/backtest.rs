//! Long/flat simulation of tree signals against buy-and-hold.
//!
//! A signal produced on bar `t` is executed at the close of `t` and so first
//! earns the return of bar `t + 1`. No costs or slippage are modelled.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::cart::DecisionTreeModel;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::timefmt::{format_f64, format_ts, Timestamp};

/// Per-bar predicted class (1 = buy, 0 = sell/flat).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignalSeries {
    pub index: Vec<Timestamp>,
    pub values: Vec<u8>,
}

/// Units held during each bar; always 0 on the first bar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionSeries {
    index: Vec<Timestamp>,
    values: Vec<u8>,
}

impl PositionSeries {
    pub fn new(index: Vec<Timestamp>, values: Vec<u8>) -> Result<Self> {
        if index.len() != values.len() {
            return Err(Error::InvalidInput("position index and values differ in length".into()));
        }
        if values.first().is_some_and(|v| *v != 0) {
            return Err(Error::InvalidInput("position on the first bar must be flat".into()));
        }
        if values.iter().any(|v| *v > 1) {
            return Err(Error::InvalidInput("positions must be 0 or 1".into()));
        }
        Ok(PositionSeries { index, values })
    }

    pub fn index(&self) -> &[Timestamp] {
        &self.index
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One maximal run of long bars. `entry_time` is the bar whose close opened
/// the position (the bar before the run), `exit_time` the last bar held.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeRecord {
    pub entry_time: Timestamp,
    pub exit_time: Timestamp,
    pub trade_return: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub signals: SignalSeries,
    pub positions: PositionSeries,
    pub strategy_returns: Vec<f64>,
    pub benchmark_returns: Vec<f64>,
    pub strategy_equity: Vec<f64>,
    pub benchmark_equity: Vec<f64>,
    pub trades: Vec<TradeRecord>,
}

impl BacktestResult {
    pub fn index(&self) -> &[Timestamp] {
        self.positions.index()
    }
}

/// `pos[0] = 0`, `pos[t] = signal[t - 1]`.
pub fn shift_signals(signals: &SignalSeries) -> Result<PositionSeries> {
    if signals.values.is_empty() {
        return Err(Error::InvalidInput("no signals".into()));
    }
    let mut values = Vec::with_capacity(signals.values.len());
    values.push(0);
    values.extend_from_slice(&signals.values[..signals.values.len() - 1]);
    PositionSeries::new(signals.index.clone(), values)
}

fn close_returns(close: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(close.len());
    if !close.is_empty() {
        out.push(0.0);
    }
    out.extend(close.windows(2).map(|w| w[1] / w[0] - 1.0));
    out
}

/// `pos[t] * (close[t] / close[t - 1] - 1)`, zero on the first bar.
pub fn strategy_returns(positions: &PositionSeries, close: &[f64]) -> Result<Vec<f64>> {
    if positions.len() != close.len() {
        return Err(Error::InvalidInput(format!(
            "{} positions but {} closes",
            positions.len(),
            close.len()
        )));
    }
    Ok(positions
        .values
        .iter()
        .zip(close_returns(close))
        .map(|(p, r)| if *p == 1 { r } else { 0.0 })
        .collect())
}

/// `initial * prod(1 + r)` up to and including each bar.
pub fn equity_curve(returns: &[f64], initial: f64) -> Result<Vec<f64>> {
    if !(initial.is_finite() && initial > 0.0) {
        return Err(Error::InvalidInput(format!(
            "initial equity must be positive, got {initial}"
        )));
    }
    let mut equity = initial;
    returns
        .iter()
        .map(|r| {
            if !(r.is_finite() && *r > -1.0) {
                return Err(Error::InvalidInput(format!("return {r} would wipe out equity")));
            }
            equity *= 1.0 + r;
            Ok(equity)
        })
        .collect()
}

/// Splits the long bars into maximal runs; a run still open on the last bar
/// is closed there.
pub fn extract_trades(positions: &PositionSeries, strategy_returns: &[f64]) -> Result<Vec<TradeRecord>> {
    if positions.len() != strategy_returns.len() {
        return Err(Error::InvalidInput("positions and returns differ in length".into()));
    }
    let values = positions.values();
    let mut trades = Vec::new();
    let mut t = 0;
    while t < values.len() {
        if values[t] == 0 {
            t += 1;
            continue;
        }
        let start = t;
        let mut growth = 1.0;
        while t < values.len() && values[t] == 1 {
            growth *= 1.0 + strategy_returns[t];
            t += 1;
        }
        trades.push(TradeRecord {
            // start >= 1 because the first position is always flat
            entry_time: positions.index[start - 1],
            exit_time: positions.index[t - 1],
            trade_return: growth - 1.0,
        });
    }
    Ok(trades)
}

/// Predicts every feature row, shifts one bar and simulates against
/// buy-and-hold. `close` / `close_index` must cover exactly the feature rows.
pub fn run_backtest(
    model: &DecisionTreeModel,
    features: &FeatureMatrix,
    close: &[f64],
    close_index: &[Timestamp],
) -> Result<BacktestResult> {
    if close_index != features.index() || close.len() != close_index.len() {
        return Err(Error::InvalidInput(format!(
            "{}: close series does not share the feature index",
            features.symbol()
        )));
    }
    let signals = SignalSeries {
        index: features.index().to_vec(),
        values: model.predict_matrix(features)?,
    };
    let positions = shift_signals(&signals)?;
    let strategy = strategy_returns(&positions, close)?;
    let benchmark = close_returns(close);
    let strategy_equity = equity_curve(&strategy, 1.0)?;
    let benchmark_equity = equity_curve(&benchmark, 1.0)?;
    let trades = extract_trades(&positions, &strategy)?;
    Ok(BacktestResult {
        signals,
        positions,
        strategy_returns: strategy,
        benchmark_returns: benchmark,
        strategy_equity,
        benchmark_equity,
        trades,
    })
}

pub fn write_backtest_csv(path: impl AsRef<Path>, result: &BacktestResult) -> Result<()> {
    let path = path.as_ref();
    let mut out =
        String::from("timestamp,signal,position,strategy_return,benchmark_return,strategy_equity,benchmark_equity\n");
    for i in 0..result.positions.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_ts(&result.positions.index[i]),
            result.signals.values[i],
            result.positions.values[i],
            format_f64(result.strategy_returns[i]),
            format_f64(result.benchmark_returns[i]),
            format_f64(result.strategy_equity[i]),
            format_f64(result.benchmark_equity[i]),
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_trades_csv(path: impl AsRef<Path>, trades: &[TradeRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("entry_time,exit_time,trade_return\n");
    for t in trades {
        let _ = writeln!(
            out,
            "{},{},{}",
            format_ts(&t.entry_time),
            format_ts(&t.exit_time),
            format_f64(t.trade_return)
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timefmt::parse_ts;

    fn index(n: usize) -> Vec<Timestamp> {
        let t0 = parse_ts("2023-01-02T09:15:00+05:30").unwrap();
        (0..n).map(|i| t0 + chrono::Duration::minutes(i as i64)).collect()
    }

    fn positions(values: &[u8]) -> PositionSeries {
        PositionSeries::new(index(values.len()), values.to_vec()).unwrap()
    }

    #[test]
    fn shift_examples() {
        let s = SignalSeries {
            index: index(3),
            values: vec![1, 1, 0],
        };
        assert_eq!(shift_signals(&s).unwrap().values(), &[0, 1, 1]);
        let z = SignalSeries {
            index: index(4),
            values: vec![0; 4],
        };
        assert_eq!(shift_signals(&z).unwrap().values(), &[0; 4]);
        let empty = SignalSeries {
            index: vec![],
            values: vec![],
        };
        assert!(shift_signals(&empty).is_err());
    }

    #[test]
    fn first_position_must_be_flat() {
        assert!(PositionSeries::new(index(2), vec![1, 0]).is_err());
        assert!(PositionSeries::new(index(2), vec![0]).is_err());
    }

    #[test]
    fn strategy_return_cases() {
        let close = [100.0, 110.0, 99.0];
        let r = strategy_returns(&positions(&[0, 1, 0]), &close).unwrap();
        assert_eq!(r[0], 0.0);
        assert!((r[1] - 0.10).abs() < 1e-15);
        assert_eq!(r[2], 0.0);
        let flat = strategy_returns(&positions(&[0, 0, 0]), &close).unwrap();
        assert_eq!(flat, vec![0.0; 3]);
        let long = strategy_returns(&positions(&[0, 1, 1]), &close).unwrap();
        assert_eq!(long, close_returns(&close));
        assert!(strategy_returns(&positions(&[0, 1]), &close).is_err());
    }

    #[test]
    fn equity_compounding() {
        let e = equity_curve(&[0.10, -0.10], 1.0).unwrap();
        assert!((e[0] - 1.10).abs() < 1e-15 && (e[1] - 0.99).abs() < 1e-15);
        assert_eq!(equity_curve(&[0.0; 3], 1.0).unwrap(), vec![1.0; 3]);
        assert!(equity_curve(&[-1.0], 1.0).is_err());
        assert!(equity_curve(&[0.1], 0.0).is_err());
    }

    #[test]
    fn trade_runs() {
        let p = positions(&[0, 1, 1, 0, 1]);
        let r = [0.0, 0.1, -0.05, 0.0, 0.02];
        let trades = extract_trades(&p, &r).unwrap();
        assert_eq!(trades.len(), 2);
        assert_eq!(
            (trades[0].entry_time, trades[0].exit_time),
            (p.index()[0], p.index()[2])
        );
        assert!((trades[0].trade_return - (1.1 * 0.95 - 1.0)).abs() < 1e-15);
        assert_eq!(
            (trades[1].entry_time, trades[1].exit_time),
            (p.index()[3], p.index()[4])
        );
        assert!(trades.iter().all(|t| t.entry_time < t.exit_time));
        assert!(extract_trades(&positions(&[0, 0, 0]), &[0.0; 3]).unwrap().is_empty());
    }
}
