//! Performance metrics for strategy and buy-and-hold return streams.
//!
//! Metrics take per-bar simple returns and equity curves. Annualisation uses
//! [`KpiConfig::periods_per_year`] bars per year.

mod metric;
mod report;

use serde::{Deserialize, Serialize};

pub use metric::{Flag, Metric};
pub use report::{
    average_portfolio, build_portfolio_report, build_report, prune_universe, psbb, CompareMetric, KpiReport,
    PortfolioReport, ReportPair, TableRow,
};

use crate::backtest::TradeRecord;
use crate::error::{Error, Result};

/// 252 trading days of 375 one-minute bars.
pub const DEFAULT_PERIODS_PER_YEAR: u64 = 252 * 375;
pub const DEFAULT_RISK_FREE_ANNUAL: f64 = 0.072;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KpiConfig {
    pub periods_per_year: u64,
    pub risk_free_annual: f64,
}

impl Default for KpiConfig {
    fn default() -> Self {
        KpiConfig {
            periods_per_year: DEFAULT_PERIODS_PER_YEAR,
            risk_free_annual: DEFAULT_RISK_FREE_ANNUAL,
        }
    }
}

impl KpiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.periods_per_year == 0 {
            return Err(Error::InvalidInput("periods_per_year must be positive".into()));
        }
        if !(self.risk_free_annual.is_finite() && self.risk_free_annual > -1.0) {
            return Err(Error::InvalidInput(format!(
                "risk_free_annual must exceed -1, got {}",
                self.risk_free_annual
            )));
        }
        Ok(())
    }

    /// Geometric de-annualisation: `(1 + rf)^(1 / N) - 1`.
    pub fn risk_free_per_period(&self) -> f64 {
        (1.0 + self.risk_free_annual).powf(1.0 / self.periods_per_year as f64) - 1.0
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sample_std(values: &[f64]) -> f64 {
    // an exactly constant series would otherwise pick up rounding noise from the mean
    if values.iter().all(|v| *v == values[0]) {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Annualised Sharpe ratio of per-bar returns over the per-bar risk-free rate,
/// with the sample standard deviation.
pub fn sharpe(returns: &[f64], cfg: &KpiConfig) -> Result<f64> {
    if returns.len() < 2 {
        return Err(Error::UndefinedMetric(format!(
            "sharpe needs 2 observations, got {}",
            returns.len()
        )));
    }
    let std = sample_std(returns);
    if std == 0.0 || !std.is_finite() {
        return Err(Error::UndefinedMetric("sharpe of a zero-variance return series".into()));
    }
    let rf = cfg.risk_free_per_period();
    let excess = returns.iter().map(|r| r - rf).sum::<f64>() / returns.len() as f64;
    Ok(excess / std * (cfg.periods_per_year as f64).sqrt())
}

/// `E_end / E_start - 1`.
pub fn total_return(equity: &[f64]) -> Result<f64> {
    match (equity.first(), equity.last()) {
        (Some(first), Some(last)) => Ok(last / first - 1.0),
        _ => Err(Error::UndefinedMetric("total return of an empty curve".into())),
    }
}

/// `(E_end / E_start)^(N / n_periods) - 1`.
pub fn cagr(equity: &[f64], n_periods: usize, cfg: &KpiConfig) -> Result<f64> {
    if n_periods < 1 {
        return Err(Error::UndefinedMetric("cagr needs at least one period".into()));
    }
    let (Some(first), Some(last)) = (equity.first(), equity.last()) else {
        return Err(Error::UndefinedMetric("cagr of an empty curve".into()));
    };
    if *first <= 0.0 || *last <= 0.0 {
        return Err(Error::InvalidInput("cagr requires positive equity".into()));
    }
    Ok((last / first).powf(cfg.periods_per_year as f64 / n_periods as f64) - 1.0)
}

/// Deepest fall below the running peak, as a non-positive fraction.
pub fn max_drawdown(equity: &[f64]) -> Result<f64> {
    if equity.is_empty() {
        return Err(Error::UndefinedMetric("drawdown of an empty curve".into()));
    }
    if equity.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::InvalidInput("drawdown requires positive equity".into()));
    }
    let mut peak = f64::MIN;
    let mut worst = 0.0f64;
    for &e in equity {
        peak = peak.max(e);
        worst = worst.min(e / peak - 1.0);
    }
    Ok(worst)
}

/// Share of trades with a strictly positive return.
pub fn win_rate(trades: &[TradeRecord]) -> Metric {
    if trades.is_empty() {
        return Metric::NotAvailable;
    }
    let wins = trades.iter().filter(|t| t.trade_return > 0.0).count();
    Metric::Value(wins as f64 / trades.len() as f64)
}

/// Gross winning trade return over gross losing trade return.
pub fn profit_factor(trades: &[TradeRecord]) -> Metric {
    if trades.is_empty() {
        return Metric::NotAvailable;
    }
    let gains: f64 = trades.iter().map(|t| t.trade_return).filter(|r| *r > 0.0).sum();
    let losses: f64 = trades.iter().map(|t| t.trade_return).filter(|r| *r < 0.0).sum();
    match (gains > 0.0, losses < 0.0) {
        (_, true) => Metric::Value(gains / losses.abs()),
        (true, false) => Metric::Infinite,
        (false, false) => Metric::NotAvailable,
    }
}

/// Sample standard deviation scaled by `sqrt(N)`.
pub fn annualized_volatility(returns: &[f64], cfg: &KpiConfig) -> Result<f64> {
    if returns.len() < 2 {
        return Err(Error::UndefinedMetric(format!(
            "volatility needs 2 observations, got {}",
            returns.len()
        )));
    }
    Ok(sample_std(returns) * (cfg.periods_per_year as f64).sqrt())
}
