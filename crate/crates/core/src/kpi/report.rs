use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metric::{Flag, Metric};
use super::{annualized_volatility, cagr, max_drawdown, profit_factor, sharpe, total_return, win_rate, KpiConfig};
use crate::backtest::{equity_curve, BacktestResult, TradeRecord};
use crate::error::{Error, Result};
use crate::timefmt::Timestamp;

/// The seven per-stream metrics. Fractions, not percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub sharpe: Metric,
    pub total_return: Metric,
    pub cagr: Metric,
    pub max_drawdown: Metric,
    pub win_rate: Metric,
    pub profit_factor: Metric,
    pub volatility: Metric,
}

impl KpiReport {
    /// `returns[0]` is the synthetic zero of the first bar and is excluded
    /// from every statistic; `trades` is `None` for buy-and-hold.
    pub fn from_stream(returns: &[f64], equity: &[f64], trades: Option<&[TradeRecord]>, cfg: &KpiConfig) -> Self {
        let observed = returns.get(1..).unwrap_or(&[]);
        KpiReport {
            sharpe: Metric::from_result(sharpe(observed, cfg)),
            total_return: Metric::from_result(total_return(equity)),
            cagr: Metric::from_result(cagr(equity, observed.len(), cfg)),
            max_drawdown: Metric::from_result(max_drawdown(equity)),
            win_rate: trades.map_or(Metric::NotAvailable, win_rate),
            profit_factor: trades.map_or(Metric::NotAvailable, profit_factor),
            volatility: Metric::from_result(annualized_volatility(observed, cfg)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiFlags {
    pub sharpe: Flag,
    pub total_return: Flag,
    pub cagr: Flag,
    pub max_drawdown: Flag,
    pub win_rate: Flag,
    pub profit_factor: Flag,
    pub volatility: Flag,
}

impl KpiFlags {
    /// Higher is better everywhere except volatility; drawdowns are
    /// non-positive so "higher" means closer to zero.
    pub fn compare(strategy: &KpiReport, benchmark: &KpiReport) -> Self {
        KpiFlags {
            sharpe: Flag::compare(strategy.sharpe, benchmark.sharpe, true),
            total_return: Flag::compare(strategy.total_return, benchmark.total_return, true),
            cagr: Flag::compare(strategy.cagr, benchmark.cagr, true),
            max_drawdown: Flag::compare(strategy.max_drawdown, benchmark.max_drawdown, true),
            win_rate: Flag::compare(strategy.win_rate, benchmark.win_rate, true),
            profit_factor: Flag::compare(strategy.profit_factor, benchmark.profit_factor, true),
            volatility: Flag::compare(strategy.volatility, benchmark.volatility, false),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportPair {
    pub strategy: KpiReport,
    pub benchmark: KpiReport,
    pub flags: KpiFlags,
}

impl ReportPair {
    pub fn new(strategy: KpiReport, benchmark: KpiReport) -> Self {
        ReportPair {
            strategy,
            benchmark,
            flags: KpiFlags::compare(&strategy, &benchmark),
        }
    }
}

/// Strategy and buy-and-hold metrics for one backtest. The benchmark never
/// trades, so its win rate and profit factor are NA.
pub fn build_report(result: &BacktestResult, cfg: &KpiConfig) -> ReportPair {
    let strategy = KpiReport::from_stream(
        &result.strategy_returns,
        &result.strategy_equity,
        Some(&result.trades),
        cfg,
    );
    let benchmark = KpiReport::from_stream(&result.benchmark_returns, &result.benchmark_equity, None, cfg);
    ReportPair::new(strategy, benchmark)
}

/// Equal-weight, per-bar rebalanced mean of the given return series.
pub fn average_portfolio<'a, I>(series: I) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = (&'a [Timestamp], &'a [f64])>,
{
    let mut iter = series.into_iter();
    let Some((index, first)) = iter.next() else {
        return Err(Error::InvalidInput("average portfolio of no series".into()));
    };
    if index.len() != first.len() {
        return Err(Error::InvalidInput("index and returns differ in length".into()));
    }
    let mut sum = first.to_vec();
    let mut count = 1usize;
    for (other_index, returns) in iter {
        if other_index != index || returns.len() != sum.len() {
            return Err(Error::InvalidInput("return series do not share an index".into()));
        }
        for (s, r) in sum.iter_mut().zip(returns) {
            *s += r;
        }
        count += 1;
    }
    Ok(sum.into_iter().map(|s| s / count as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareMetric {
    TotalReturn,
    Sharpe,
}

fn pick(report: &KpiReport, metric: CompareMetric) -> Metric {
    match metric {
        CompareMetric::TotalReturn => report.total_return,
        CompareMetric::Sharpe => report.sharpe,
    }
}

fn beats(symbol: &str, pair: &ReportPair, metric: CompareMetric) -> Result<bool> {
    match (
        pick(&pair.strategy, metric).value(),
        pick(&pair.benchmark, metric).value(),
    ) {
        (Some(s), Some(b)) => Ok(s > b),
        _ => Err(Error::UndefinedMetric(format!("{symbol}: {metric:?} undefined"))),
    }
}

/// Percentage of symbols whose strategy strictly beats buy-and-hold.
pub fn psbb(per_symbol: &BTreeMap<String, ReportPair>, metric: CompareMetric) -> Result<f64> {
    if per_symbol.is_empty() {
        return Err(Error::InvalidInput("psbb over an empty universe".into()));
    }
    let mut wins = 0usize;
    for (symbol, pair) in per_symbol {
        wins += usize::from(beats(symbol, pair, metric)?);
    }
    Ok(100.0 * wins as f64 / per_symbol.len() as f64)
}

/// Symbols whose strategy total return strictly beats buy-and-hold.
pub fn prune_universe(per_symbol: &BTreeMap<String, ReportPair>) -> Result<BTreeSet<String>> {
    let mut kept = BTreeSet::new();
    for (symbol, pair) in per_symbol {
        if beats(symbol, pair, CompareMetric::TotalReturn)? {
            kept.insert(symbol.clone());
        }
    }
    Ok(kept)
}

/// One line of the summary table, in display units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub metric: String,
    pub benchmark: Metric,
    pub strategy: Metric,
    pub flag: Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioReport {
    pub config: KpiConfig,
    pub per_symbol: BTreeMap<String, ReportPair>,
    pub average_portfolio: ReportPair,
    pub psbbr: Metric,
    pub psbbs: Metric,
    /// Symbols kept by total-return pruning; `None` when some symbol's total
    /// return is undefined.
    pub outperformers: Option<Vec<String>>,
    pub table: Vec<TableRow>,
}

pub const AVERAGE_PORTFOLIO: &str = "average_portfolio";

/// Per-symbol reports plus the equal-weight average portfolio. The average
/// portfolio's win rate and profit factor pool every symbol's trades.
pub fn build_portfolio_report(results: &BTreeMap<String, BacktestResult>, cfg: &KpiConfig) -> Result<PortfolioReport> {
    cfg.validate()?;
    if results.is_empty() {
        return Err(Error::InvalidInput("portfolio report over an empty universe".into()));
    }
    let per_symbol: BTreeMap<String, ReportPair> =
        results.iter().map(|(s, r)| (s.clone(), build_report(r, cfg))).collect();

    let strat = average_portfolio(results.values().map(|r| (r.index(), r.strategy_returns.as_slice())))?;
    let bench = average_portfolio(results.values().map(|r| (r.index(), r.benchmark_returns.as_slice())))?;
    let pooled: Vec<TradeRecord> = results.values().flat_map(|r| r.trades.iter().copied()).collect();
    let average = ReportPair::new(
        KpiReport::from_stream(&strat, &equity_curve(&strat, 1.0)?, Some(&pooled), cfg),
        KpiReport::from_stream(&bench, &equity_curve(&bench, 1.0)?, None, cfg),
    );

    let psbbr = Metric::from_result(psbb(&per_symbol, CompareMetric::TotalReturn));
    let psbbs = Metric::from_result(psbb(&per_symbol, CompareMetric::Sharpe));
    let outperformers = prune_universe(&per_symbol).ok().map(|s| s.into_iter().collect());
    let table = summary_table(&average, psbbr, psbbs);
    Ok(PortfolioReport {
        config: *cfg,
        per_symbol,
        average_portfolio: average,
        psbbr,
        psbbs,
        outperformers,
        table,
    })
}

fn summary_table(avg: &ReportPair, psbbr: Metric, psbbs: Metric) -> Vec<TableRow> {
    let (s, b, f) = (&avg.strategy, &avg.benchmark, &avg.flags);
    let row = |metric: &str, bench: Metric, strat: Metric, flag: Flag| TableRow {
        metric: metric.to_string(),
        benchmark: bench,
        strategy: strat,
        flag,
    };
    vec![
        row("Sharpe Ratio", b.sharpe, s.sharpe, f.sharpe),
        row(
            "Total Return [%]",
            b.total_return.scaled(100.0),
            s.total_return.scaled(100.0),
            f.total_return,
        ),
        row("CAGR [%]", b.cagr.scaled(100.0), s.cagr.scaled(100.0), f.cagr),
        row(
            "Max Drawdown [%]",
            b.max_drawdown.scaled(100.0),
            s.max_drawdown.scaled(100.0),
            f.max_drawdown,
        ),
        row(
            "Win Rate [%]",
            b.win_rate.scaled(100.0),
            s.win_rate.scaled(100.0),
            f.win_rate,
        ),
        row("Profit Factor", b.profit_factor, s.profit_factor, f.profit_factor),
        row(
            "Volatility [%]",
            b.volatility.scaled(100.0),
            s.volatility.scaled(100.0),
            f.volatility,
        ),
        row("PSBBR [%]", Metric::NotAvailable, psbbr, Flag::NotAvailable),
        row("PSBBS [%]", Metric::NotAvailable, psbbs, Flag::NotAvailable),
    ]
}

impl PortfolioReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports always serialise");
        text.push('\n');
        text
    }

    /// `symbol,side,<seven metrics>`; the average portfolio comes last.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("symbol,side,sharpe,total_return,cagr,max_drawdown,win_rate,profit_factor,volatility\n");
        let mut line = |symbol: &str, side: &str, k: &KpiReport| {
            let _ = writeln!(
                out,
                "{symbol},{side},{},{},{},{},{},{},{}",
                k.sharpe, k.total_return, k.cagr, k.max_drawdown, k.win_rate, k.profit_factor, k.volatility
            );
        };
        for (symbol, pair) in &self.per_symbol {
            line(symbol, "strategy", &pair.strategy);
            line(symbol, "benchmark", &pair.benchmark);
        }
        line(AVERAGE_PORTFOLIO, "strategy", &self.average_portfolio.strategy);
        line(AVERAGE_PORTFOLIO, "benchmark", &self.average_portfolio.benchmark);
        out
    }

    /// Fixed-width text rendering of [`PortfolioReport::table`].
    pub fn to_table_text(&self, title: &str) -> String {
        let fmt = |m: &Metric| match m {
            Metric::Value(v) => format!("{v:.2}"),
            other => other.to_string(),
        };
        let mut out = format!(
            "{title}\n{:<20}{:>12}{:>12}{:>24}\n",
            "KPI", "Benchmark", "Strategy", "Under/Overperforms"
        );
        for row in &self.table {
            let _ = writeln!(
                out,
                "{:<20}{:>12}{:>12}{:>24}",
                row.metric,
                fmt(&row.benchmark),
                fmt(&row.strategy),
                row.flag.to_string()
            );
        }
        out
    }
}
