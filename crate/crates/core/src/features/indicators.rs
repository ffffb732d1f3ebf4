//! Windowed indicators over price series.
//!
//! Every function returns a vector of the input length. Positions before the
//! indicator is first defined hold `NaN`.

use crate::error::{Error, Result};

fn require(what: &'static str, got: usize, needed: usize) -> Result<()> {
    if got < needed {
        return Err(Error::TooShort { what, needed, got });
    }
    Ok(())
}

fn require_period(what: &'static str, period: usize, min: usize) -> Result<()> {
    if period < min {
        return Err(Error::InvalidInput(format!(
            "{what}: period must be at least {min}, got {period}"
        )));
    }
    Ok(())
}

fn require_positive(what: &'static str, values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "{what}: prices must be positive and finite, got {v}"
        )));
    }
    Ok(())
}

/// Index of the first defined (non-`NaN`) value.
pub fn first_defined(values: &[f64]) -> Option<usize> {
    values.iter().position(|v| !v.is_nan())
}

/// `close[t] / close[t - lag] - 1`.
pub fn simple_returns(close: &[f64], lag: usize) -> Result<Vec<f64>> {
    require_period("simple_returns", lag, 1)?;
    require("simple_returns", close.len(), lag + 1)?;
    require_positive("simple_returns", close)?;
    let mut out = vec![f64::NAN; close.len()];
    for t in lag..close.len() {
        out[t] = close[t] / close[t - lag] - 1.0;
    }
    Ok(out)
}

fn rsi_value(avg_gain: f64, avg_loss: f64) -> f64 {
    match (avg_gain > 0.0, avg_loss > 0.0) {
        (false, false) => 50.0,
        (true, false) => 100.0,
        (false, true) => 0.0,
        (true, true) => (100.0 - 100.0 / (1.0 + avg_gain / avg_loss)).clamp(0.0, 100.0),
    }
}

/// Wilder's RSI with mean-initialised averages. First defined at `period`.
pub fn rsi(close: &[f64], period: usize) -> Result<Vec<f64>> {
    require_period("rsi", period, 2)?;
    require("rsi", close.len(), period + 1)?;
    let n = close.len();
    let mut out = vec![f64::NAN; n];
    let p = period as f64;
    let mut avg_gain = 0.0;
    let mut avg_loss = 0.0;
    for t in 1..=period {
        let d = close[t] - close[t - 1];
        avg_gain += d.max(0.0);
        avg_loss += (-d).max(0.0);
    }
    avg_gain /= p;
    avg_loss /= p;
    out[period] = rsi_value(avg_gain, avg_loss);
    for t in period + 1..n {
        let d = close[t] - close[t - 1];
        avg_gain = (avg_gain * (p - 1.0) + d.max(0.0)) / p;
        avg_loss = (avg_loss * (p - 1.0) + (-d).max(0.0)) / p;
        out[t] = rsi_value(avg_gain, avg_loss);
    }
    Ok(out)
}

/// Wilder's ADX. `DX` is defined from `period`, `ADX` from `2 * period - 1`.
pub fn adx(high: &[f64], low: &[f64], close: &[f64], period: usize) -> Result<Vec<f64>> {
    require_period("adx", period, 2)?;
    let n = close.len();
    if high.len() != n || low.len() != n {
        return Err(Error::InvalidInput("adx: high/low/close lengths differ".into()));
    }
    require("adx", n, 2 * period + 1)?;
    let p = period as f64;

    let mut plus_dm = vec![0.0; n];
    let mut minus_dm = vec![0.0; n];
    let mut tr = vec![0.0; n];
    for t in 1..n {
        let up = high[t] - high[t - 1];
        let down = low[t - 1] - low[t];
        plus_dm[t] = if up > down && up > 0.0 { up } else { 0.0 };
        minus_dm[t] = if down > up && down > 0.0 { down } else { 0.0 };
        tr[t] = (high[t] - low[t])
            .max((high[t] - close[t - 1]).abs())
            .max((low[t] - close[t - 1]).abs());
    }

    let dx_at = |s_plus: f64, s_minus: f64, s_tr: f64| -> f64 {
        let (di_plus, di_minus) = if s_tr > 0.0 {
            (100.0 * s_plus / s_tr, 100.0 * s_minus / s_tr)
        } else {
            (0.0, 0.0)
        };
        let sum = di_plus + di_minus;
        if sum > 0.0 {
            (100.0 * (di_plus - di_minus).abs() / sum).clamp(0.0, 100.0)
        } else {
            0.0
        }
    };

    let mut s_plus = plus_dm[1..=period].iter().sum::<f64>() / p;
    let mut s_minus = minus_dm[1..=period].iter().sum::<f64>() / p;
    let mut s_tr = tr[1..=period].iter().sum::<f64>() / p;
    let mut dx = vec![f64::NAN; n];
    dx[period] = dx_at(s_plus, s_minus, s_tr);
    for t in period + 1..n {
        s_plus = (s_plus * (p - 1.0) + plus_dm[t]) / p;
        s_minus = (s_minus * (p - 1.0) + minus_dm[t]) / p;
        s_tr = (s_tr * (p - 1.0) + tr[t]) / p;
        dx[t] = dx_at(s_plus, s_minus, s_tr);
    }

    let first = 2 * period - 1;
    let mut out = vec![f64::NAN; n];
    let mut value = dx[period..=first].iter().sum::<f64>() / p;
    out[first] = value.clamp(0.0, 100.0);
    for t in first + 1..n {
        value = (value * (p - 1.0) + dx[t]) / p;
        out[t] = value.clamp(0.0, 100.0);
    }
    Ok(out)
}

/// Trailing arithmetic mean including `t`. First defined at `period - 1`.
pub fn sma(values: &[f64], period: usize) -> Result<Vec<f64>> {
    require_period("sma", period, 1)?;
    require("sma", values.len(), period)?;
    let mut out = vec![f64::NAN; values.len()];
    for t in period - 1..values.len() {
        out[t] = values[t + 1 - period..=t].iter().sum::<f64>() / period as f64;
    }
    Ok(out)
}

/// `SMA(period) / close`.
pub fn sma_close_ratio(close: &[f64], period: usize) -> Result<Vec<f64>> {
    require_period("sma_close_ratio", period, 2)?;
    require("sma_close_ratio", close.len(), period)?;
    require_positive("sma_close_ratio", close)?;
    let avg = sma(close, period)?;
    Ok(avg.iter().zip(close).map(|(s, c)| s / c).collect())
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Rolling Pearson correlation between `SMA(period)` and close over the
/// trailing `period` pairs. Degenerate (zero-variance) windows give 0. First
/// defined at `2 * period - 2`.
pub fn sma_close_corr(close: &[f64], period: usize) -> Result<Vec<f64>> {
    require_period("sma_close_corr", period, 2)?;
    require("sma_close_corr", close.len(), 2 * period - 1)?;
    let avg = sma(close, period)?;
    let mut out = vec![f64::NAN; close.len()];
    for (t, slot) in out.iter_mut().enumerate().skip(2 * period - 2) {
        let w = t + 1 - period..=t;
        *slot = pearson(&avg[w.clone()], &close[w]);
    }
    Ok(out)
}

/// Trailing sample standard deviation (`n - 1` denominator) of a return series
/// that may itself start with undefined values.
pub fn rolling_volatility(returns: &[f64], period: usize) -> Result<Vec<f64>> {
    require_period("rolling_volatility", period, 2)?;
    let start = first_defined(returns).unwrap_or(returns.len());
    require("rolling_volatility", returns.len() - start, period)?;
    if returns[start..].iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidInput(
            "rolling_volatility: gap inside return series".into(),
        ));
    }
    let mut out = vec![f64::NAN; returns.len()];
    let p = period as f64;
    for t in start + period - 1..returns.len() {
        let w = &returns[t + 1 - period..=t];
        let mean = w.iter().sum::<f64>() / p;
        let ss: f64 = w.iter().map(|r| (r - mean) * (r - mean)).sum();
        out[t] = (ss / (p - 1.0)).sqrt();
    }
    Ok(out)
}

/// Rolling VWAP on typical price `(h + l + c) / 3`, divided by close. A window
/// with zero total volume falls back to the plain mean of typical price.
pub fn vwap_close_ratio(high: &[f64], low: &[f64], close: &[f64], volume: &[f64], period: usize) -> Result<Vec<f64>> {
    require_period("vwap_close_ratio", period, 2)?;
    let n = close.len();
    if high.len() != n || low.len() != n || volume.len() != n {
        return Err(Error::InvalidInput("vwap_close_ratio: column lengths differ".into()));
    }
    require("vwap_close_ratio", n, period)?;
    require_positive("vwap_close_ratio", close)?;
    if let Some(v) = volume.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "vwap_close_ratio: volume must be non-negative, got {v}"
        )));
    }
    let typical: Vec<f64> = (0..n).map(|i| (high[i] + low[i] + close[i]) / 3.0).collect();
    let mut out = vec![f64::NAN; n];
    for t in period - 1..n {
        let w = t + 1 - period..=t;
        let vol: f64 = volume[w.clone()].iter().sum();
        let vwap = if vol > 0.0 {
            typical[w.clone()]
                .iter()
                .zip(&volume[w])
                .map(|(p, v)| p * v)
                .sum::<f64>()
                / vol
        } else {
            typical[w].iter().sum::<f64>() / period as f64
        };
        out[t] = vwap / close[t];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defined(v: &[f64]) -> Vec<f64> {
        v.iter().copied().filter(|x| !x.is_nan()).collect()
    }

    #[test]
    fn returns_basic() {
        let r = simple_returns(&[100.0, 110.0], 1).unwrap();
        assert!(r[0].is_nan());
        assert!((r[1] - 0.10).abs() < 1e-15);
        let flat = simple_returns(&[5.0; 40], 15).unwrap();
        assert!(defined(&flat).iter().all(|x| *x == 0.0));
        assert_eq!(first_defined(&flat), Some(15));
        assert!(simple_returns(&[1.0; 15], 15).is_err());
    }

    #[test]
    fn rsi_anchors() {
        let up: Vec<f64> = (1..=40).map(f64::from).collect();
        let down: Vec<f64> = up.iter().rev().copied().collect();
        assert!(defined(&rsi(&up, 14).unwrap()).iter().all(|v| *v == 100.0));
        assert!(defined(&rsi(&down, 14).unwrap()).iter().all(|v| *v == 0.0));
        assert!(defined(&rsi(&[7.0; 40], 14).unwrap()).iter().all(|v| *v == 50.0));
        assert_eq!(first_defined(&rsi(&up, 14).unwrap()), Some(14));
        assert!(rsi(&up[..14], 14).is_err());
    }

    #[test]
    fn adx_flat_is_zero() {
        let p = [10.0; 60];
        let out = adx(&p, &p, &p, 14).unwrap();
        assert_eq!(first_defined(&out), Some(27));
        assert!(defined(&out).iter().all(|v| *v == 0.0));
        assert!(adx(&p[..28], &p[..28], &p[..28], 14).is_err());
    }

    #[test]
    fn adx_strong_uptrend() {
        let close: Vec<f64> = (0..200).map(|i| 100.0 + i as f64).collect();
        let high: Vec<f64> = close.iter().map(|c| c + 0.5).collect();
        let low: Vec<f64> = close.iter().map(|c| c - 0.5).collect();
        let out = adx(&high, &low, &close, 14).unwrap();
        assert!(*out.last().unwrap() > 90.0);
    }

    #[test]
    fn sma_ratio_arithmetic() {
        let out = sma_close_ratio(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert!(out[0].is_nan());
        assert_eq!(out[3], 0.875);
        let flat = sma_close_ratio(&[3.0; 20], 14).unwrap();
        assert!(defined(&flat).iter().all(|v| *v == 1.0));
    }

    #[test]
    fn corr_anchors() {
        let linear: Vec<f64> = (0..60).map(|i| 50.0 + 0.25 * i as f64).collect();
        let c = sma_close_corr(&linear, 14).unwrap();
        assert_eq!(first_defined(&c), Some(26));
        assert!(defined(&c).iter().all(|v| (v - 1.0).abs() < 1e-12));
        let flat = sma_close_corr(&[4.0; 30], 14).unwrap();
        assert!(defined(&flat).iter().all(|v| *v == 0.0));
        assert!(sma_close_corr(&linear[..26], 14).is_err());
    }

    #[test]
    fn volatility_alternating_closed_form() {
        let r = 0.01;
        let returns: Vec<f64> = (0..30).map(|i| if i % 2 == 0 { r } else { -r }).collect();
        let out = rolling_volatility(&returns, 14).unwrap();
        let want = r * (14.0f64 / 13.0).sqrt();
        assert!(defined(&out).iter().all(|v| (v - want).abs() < 1e-15));
        let constant = rolling_volatility(&[0.002; 20], 14).unwrap();
        assert!(defined(&constant).iter().all(|v| v.abs() < 1e-18));
    }

    #[test]
    fn volatility_skips_leading_nan() {
        let mut returns = vec![f64::NAN; 15];
        returns.extend((0..20).map(|i| i as f64 * 1e-3));
        let out = rolling_volatility(&returns, 14).unwrap();
        assert_eq!(first_defined(&out), Some(28));
        returns[20] = f64::NAN;
        assert!(rolling_volatility(&returns, 14).is_err());
    }

    #[test]
    fn vwap_cases() {
        let out = vwap_close_ratio(&[10.0, 20.0], &[10.0, 20.0], &[10.0, 20.0], &[1.0, 3.0], 2).unwrap();
        assert_eq!(out[1] * 20.0, 17.5);
        let zero = vwap_close_ratio(&[10.0; 3], &[10.0; 3], &[10.0; 3], &[0.0; 3], 2).unwrap();
        assert_eq!(defined(&zero), vec![1.0, 1.0]);
        let flat = vwap_close_ratio(
            &[5.0; 20],
            &[5.0; 20],
            &[5.0; 20],
            &(1..=20).map(f64::from).collect::<Vec<_>>(),
            14,
        )
        .unwrap();
        assert!(defined(&flat).iter().all(|v| (*v - 1.0).abs() < 1e-15));
    }
}
