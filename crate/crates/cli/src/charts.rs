//! Static SVG charts: equity curves and monthly returns, strategy against
//! buy-and-hold.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::Datelike;
use treetrade::backtest::{equity_curve, BacktestResult};
use treetrade::kpi::average_portfolio;
use treetrade::timefmt::Timestamp;

use crate::error::CliResult;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const STRATEGY_COLOR: &str = "#1565c0";
const BENCHMARK_COLOR: &str = "#9e9e9e";

fn header(title: &str) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn legend(s: &mut String) {
    for (i, (name, color)) in [("strategy", STRATEGY_COLOR), ("benchmark", BENCHMARK_COLOR)]
        .iter()
        .enumerate()
    {
        let y = 40.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/><text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{name}</text>",
            WIDTH - 130.0,
            y - 9.0,
            WIDTH - 115.0,
            y
        );
    }
}

fn y_axis(s: &mut String, lo: f64, hi: f64, label: impl Fn(f64) -> String) {
    let plot_h = HEIGHT - 2.0 * MARGIN;
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = HEIGHT - MARGIN - plot_h * k as f64 / 4.0;
        let _ = writeln!(
            s,
            "<line x1=\"{MARGIN}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" stroke=\"#eeeeee\"/><text x=\"{}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{}</text>",
            WIDTH - MARGIN,
            MARGIN - 4.0,
            y + 3.0,
            label(v)
        );
    }
}

fn bounds<'a>(series: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = series.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(*v), hi.max(*v))
    });
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if lo == hi {
        (lo - 0.5 * lo.abs().max(1e-3), hi + 0.5 * hi.abs().max(1e-3))
    } else {
        (lo, hi)
    }
}

/// Line chart of two equity curves over the same bars.
pub fn equity_svg(title: &str, strategy: &[f64], benchmark: &[f64]) -> String {
    let mut s = header(title);
    let (lo, hi) = bounds(strategy.iter().chain(benchmark));
    y_axis(&mut s, lo, hi, |v| format!("{v:.3}"));
    let n = strategy.len().max(2);
    let x = |i: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / (n - 1) as f64;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / (hi - lo);
    for (curve, color) in [(benchmark, BENCHMARK_COLOR), (strategy, STRATEGY_COLOR)] {
        let mut points = String::new();
        for (i, v) in curve.iter().enumerate() {
            let _ = write!(points, "{:.2},{:.2} ", x(i), y(*v));
        }
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\" points=\"{}\"/>",
            points.trim_end()
        );
    }
    legend(&mut s);
    s.push_str("</svg>\n");
    s
}

/// Compounded return per calendar month (exchange-local).
pub fn monthly_returns(index: &[Timestamp], returns: &[f64]) -> Vec<((i32, u32), f64)> {
    let mut months: BTreeMap<(i32, u32), f64> = BTreeMap::new();
    for (ts, r) in index.iter().zip(returns) {
        let key = (ts.year(), ts.month());
        let g = months.entry(key).or_insert(1.0);
        *g *= 1.0 + r;
    }
    months.into_iter().map(|(k, g)| (k, g - 1.0)).collect()
}

/// Grouped bar chart of monthly returns.
pub fn monthly_svg(title: &str, index: &[Timestamp], strategy: &[f64], benchmark: &[f64]) -> String {
    let strat = monthly_returns(index, strategy);
    let bench = monthly_returns(index, benchmark);
    let mut s = header(title);
    let (lo, hi) = bounds(strat.iter().chain(&bench).map(|(_, v)| v).chain([0.0f64].iter()));
    y_axis(&mut s, lo, hi, |v| format!("{:.2}%", 100.0 * v));
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / (hi - lo);
    let slot = (WIDTH - 2.0 * MARGIN) / strat.len().max(1) as f64;
    let bar = slot * 0.38;
    for (i, (((year, month), sv), (_, bv))) in strat.iter().zip(&bench).enumerate() {
        let x0 = MARGIN + slot * i as f64 + slot * 0.1;
        for (k, (v, color)) in [(*sv, STRATEGY_COLOR), (*bv, BENCHMARK_COLOR)].into_iter().enumerate() {
            let (top, bottom) = (y(v.max(0.0)), y(v.min(0.0)));
            let _ = writeln!(
                s,
                "<rect x=\"{:.2}\" y=\"{top:.2}\" width=\"{bar:.2}\" height=\"{:.2}\" fill=\"{color}\"/>",
                x0 + bar * k as f64,
                (bottom - top).max(0.5)
            );
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{year}-{month:02}</text>",
            x0 + bar,
            HEIGHT - MARGIN + 14.0
        );
    }
    let _ = writeln!(
        s,
        "<line x1=\"{MARGIN}\" y1=\"{0:.2}\" x2=\"{1}\" y2=\"{0:.2}\" stroke=\"black\"/>",
        y(0.0),
        WIDTH - MARGIN
    );
    legend(&mut s);
    s.push_str("</svg>\n");
    s
}

/// File name and SVG text for the average portfolio and every symbol.
pub fn render_all(results: &BTreeMap<String, BacktestResult>) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    if let Some(first) = results.values().next() {
        let index = first.index();
        let strat = average_portfolio(results.values().map(|r| (r.index(), r.strategy_returns.as_slice())))?;
        let bench = average_portfolio(results.values().map(|r| (r.index(), r.benchmark_returns.as_slice())))?;
        let (se, be) = (equity_curve(&strat, 1.0)?, equity_curve(&bench, 1.0)?);
        out.push((
            "average_portfolio.equity.svg".into(),
            equity_svg("average portfolio equity", &se, &be),
        ));
        out.push((
            "average_portfolio.monthly.svg".into(),
            monthly_svg("average portfolio monthly returns", index, &strat, &bench),
        ));
    }
    for (s, r) in results {
        out.push((
            format!("{s}.equity.svg"),
            equity_svg(&format!("{s} equity"), &r.strategy_equity, &r.benchmark_equity),
        ));
        out.push((
            format!("{s}.monthly.svg"),
            monthly_svg(
                &format!("{s} monthly returns"),
                r.index(),
                &r.strategy_returns,
                &r.benchmark_returns,
            ),
        ));
    }
    Ok(out)
}
