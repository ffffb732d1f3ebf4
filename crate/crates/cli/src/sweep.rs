//! Refits and re-evaluates the universe at several tree depths.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use treetrade::cart::TrainConfig;
use treetrade::kpi::{KpiReport, Metric, PortfolioReport};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::pipeline::{evaluate, finish, prepare, Artifacts, Failures, Options};

pub const SWEEP_HEADER: &str =
    "depth,symbols,sharpe,profit_factor,beat_total_return,beat_sharpe,total_return,cagr,max_drawdown,win_rate,volatility";

/// Test-slice average-portfolio results at one depth. Ratios are fractions,
/// not percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub depth: usize,
    pub symbols: usize,
    pub sharpe: Metric,
    pub profit_factor: Metric,
    /// Symbols whose strategy beats buy-and-hold; `None` when undefined for
    /// some symbol.
    pub beat_total_return: Option<usize>,
    pub beat_sharpe: Option<usize>,
    pub total_return: Metric,
    pub cagr: Metric,
    pub max_drawdown: Metric,
    pub win_rate: Metric,
    pub volatility: Metric,
}

fn count_beats(report: &PortfolioReport, pick: fn(&KpiReport) -> Metric) -> Option<usize> {
    let mut n = 0;
    for pair in report.per_symbol.values() {
        let (s, b) = (pick(&pair.strategy).value()?, pick(&pair.benchmark).value()?);
        n += usize::from(s > b);
    }
    Some(n)
}

impl SweepRow {
    pub fn from_report(depth: usize, report: &PortfolioReport) -> Self {
        let avg = &report.average_portfolio.strategy;
        SweepRow {
            depth,
            symbols: report.per_symbol.len(),
            sharpe: avg.sharpe,
            profit_factor: avg.profit_factor,
            beat_total_return: count_beats(report, |k| k.total_return),
            beat_sharpe: count_beats(report, |k| k.sharpe),
            total_return: avg.total_return,
            cagr: avg.cagr,
            max_drawdown: avg.max_drawdown,
            win_rate: avg.win_rate,
            volatility: avg.volatility,
        }
    }

    pub fn to_csv_line(&self) -> String {
        let count = |c: Option<usize>| c.map_or_else(|| "NA".to_string(), |c| c.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.depth,
            self.symbols,
            self.sharpe,
            self.profit_factor,
            count(self.beat_total_return),
            count(self.beat_sharpe),
            self.total_return,
            self.cagr,
            self.max_drawdown,
            self.win_rate,
            self.volatility
        )
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{}", r.to_csv_line());
    }
    out
}

/// Parses `3,4,5,6`; depths must be distinct and at least 1.
pub fn parse_depths(text: &str) -> CliResult<Vec<usize>> {
    let mut seen = BTreeSet::new();
    let mut depths = Vec::new();
    for part in text.split(',') {
        let d: usize = part
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad depth {part:?} in --depths")))?;
        validate_depth(d, &mut seen)?;
        depths.push(d);
    }
    Ok(depths)
}

fn validate_depth(d: usize, seen: &mut BTreeSet<usize>) -> CliResult<()> {
    if d == 0 {
        return Err(CliError::Config("depth must be at least 1".into()));
    }
    if !seen.insert(d) {
        return Err(CliError::Config(format!("depth {d} listed twice")));
    }
    Ok(())
}

/// Fits and backtests at every depth; writes `sweep/depth_sweep.csv`.
pub fn sweep_depth(cfg: &RunConfig, depths: &[usize], opts: &Options, out: &Artifacts) -> CliResult<Vec<SweepRow>> {
    if depths.is_empty() {
        return Err(CliError::Config("no depths given".into()));
    }
    let mut seen = BTreeSet::new();
    for d in depths {
        validate_depth(*d, &mut seen)?;
    }
    let pool = opts.pool()?;
    let mut failures = Failures::default();
    let mut rows = Vec::with_capacity(depths.len());
    let result = pool.install(|| -> CliResult<()> {
        let prepared = prepare(cfg, opts, true, &mut failures)?;
        for &depth in depths {
            let train = TrainConfig {
                max_depth: depth,
                ..cfg.train
            };
            let eval = evaluate(&prepared, cfg, &train, opts, &mut failures)?;
            rows.push(SweepRow::from_report(depth, &eval.reports[1]));
        }
        out.write("sweep", "depth_sweep.csv", &sweep_csv(&rows))?;
        Ok(())
    });
    finish(result, &failures, out)?;
    Ok(rows)
}
