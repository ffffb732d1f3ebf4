//! End-to-end stages over the configured universe.
//!
//! Each symbol's raw bars are cut to the train and test ranges before
//! alignment, so nothing from the test range reaches a training artifact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use treetrade::backtest::{run_backtest, write_backtest_csv, write_trades_csv, BacktestResult};
use treetrade::cart::{export_dot, export_rules, fit, serialize, Dataset, DecisionTreeModel, TrainConfig};
use treetrade::data::{
    apply_adjustment, compute_adjustment_factors, ingest_bars, ingest_daily, union_align, write_bars, write_panel,
    AlignedPanel, BarSeries, TimeRange,
};
use treetrade::features::{build_features, build_labels, write_feature_csv, FeatureMatrix, LabelVector};
use treetrade::kpi::{build_portfolio_report, PortfolioReport};
use treetrade::Error;

use crate::charts;
use crate::config::{AdjustmentMode, RunConfig};
use crate::error::{CliError, CliResult, StageError};

#[derive(Debug, Clone, Default)]
pub struct Options {
    /// Worker threads; `None` uses the available parallelism.
    pub jobs: Option<usize>,
    pub keep_going: bool,
    pub charts: bool,
}

impl Options {
    pub fn pool(&self) -> CliResult<rayon::ThreadPool> {
        if self.jobs == Some(0) {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Align,
    Features,
    Train,
    Backtest,
    Report,
    Run,
}

/// Failures recorded under `--keep-going`, in universe order.
#[derive(Debug, Default)]
pub struct Failures(pub Vec<StageError>);

impl Failures {
    /// Keeps the successes. Without `keep_going` the first failure aborts.
    fn absorb<T>(
        &mut self,
        results: Vec<(String, Result<T, StageError>)>,
        keep_going: bool,
    ) -> CliResult<Vec<(String, T)>> {
        let mut ok = Vec::with_capacity(results.len());
        for (symbol, r) in results {
            match r {
                Ok(v) => ok.push((symbol, v)),
                Err(e) if keep_going => self.0.push(e),
                Err(e) => return Err(e.into()),
            }
        }
        Ok(ok)
    }

    fn report(&self) -> String {
        let mut out = String::new();
        for f in &self.0 {
            let _ = writeln!(out, "{f}");
        }
        out
    }
}

pub struct Artifacts {
    root: PathBuf,
}

impl Artifacts {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Artifacts { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Creates `rel` (a directory) under the root.
    pub fn dir(&self, rel: &str) -> CliResult<PathBuf> {
        let path = self.root.join(rel);
        std::fs::create_dir_all(&path).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }

    pub fn write(&self, dir: &str, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.dir(dir)?.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }
}

/// Features, labels and closes of one symbol on one slice.
#[derive(Debug, Clone)]
pub struct SymbolSlice {
    pub features: FeatureMatrix,
    pub labels: LabelVector,
    /// Closes on the feature rows.
    pub close: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Slice {
    pub name: &'static str,
    pub range: TimeRange,
    pub panel: AlignedPanel,
    pub symbols: BTreeMap<String, SymbolSlice>,
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub ingested: Vec<BarSeries>,
    pub train: Slice,
    /// Absent when only training artifacts were requested.
    pub test: Option<Slice>,
}

impl Prepared {
    pub fn slices(&self) -> Vec<&Slice> {
        std::iter::once(&self.train).chain(&self.test).collect()
    }
}

fn ingest_symbol(cfg: &RunConfig, symbol: &str) -> Result<BarSeries, StageError> {
    let fail = |stage: &str, e: Error| StageError::new(Some(symbol), stage, e);
    let raw = ingest_bars(cfg.bars_path(symbol), symbol).map_err(|e| fail("ingest", e))?;
    let daily = cfg.daily_path(symbol);
    let adjust = match cfg.adjustment {
        AdjustmentMode::None => false,
        AdjustmentMode::Auto => daily.is_file(),
        AdjustmentMode::Required => true,
    };
    if !adjust {
        return Ok(raw);
    }
    let closes = ingest_daily(&daily).map_err(|e| fail("adjust", e))?;
    let factors =
        compute_adjustment_factors(symbol, &closes.close, &closes.adjusted_close).map_err(|e| fail("adjust", e))?;
    apply_adjustment(&raw, &factors).map_err(|e| fail("adjust", e))
}

fn ingest_all(cfg: &RunConfig, opts: &Options, failures: &mut Failures) -> CliResult<Vec<BarSeries>> {
    let results: Vec<_> = cfg
        .universe
        .par_iter()
        .map(|s| (s.clone(), ingest_symbol(cfg, s)))
        .collect();
    let ok = failures.absorb(results, opts.keep_going)?;
    if ok.is_empty() {
        return Err(StageError::new(None, "ingest", Error::InvalidInput("every symbol failed".into())).into());
    }
    Ok(ok.into_iter().map(|(_, s)| s).collect())
}

fn symbol_slice(panel: &AlignedPanel, symbol: &str, cfg: &RunConfig) -> treetrade::Result<SymbolSlice> {
    let features = build_features(panel, symbol, &cfg.features)?;
    let close = &panel.get(symbol).expect("symbol is in the panel").close;
    let labels = build_labels(symbol, close, panel.index(), features.index())?;
    let close = close[features.warmup_length()..].to_vec();
    Ok(SymbolSlice {
        features,
        labels,
        close,
    })
}

fn build_slice(
    name: &'static str,
    range: TimeRange,
    series: &[BarSeries],
    cfg: &RunConfig,
    opts: &Options,
    failures: &mut Failures,
) -> CliResult<Slice> {
    let stage = |what: &str| format!("{what} ({name})");
    let cut: Vec<_> = series
        .iter()
        .map(|s| {
            let part = s.restrict(&range.start, &range.end);
            let r = if part.is_empty() {
                Err(StageError::new(
                    Some(s.symbol()),
                    stage("split"),
                    Error::Split("no bars inside the range".into()),
                ))
            } else {
                Ok(part)
            };
            (s.symbol().to_string(), r)
        })
        .collect();
    let cut: Vec<BarSeries> = failures
        .absorb(cut, opts.keep_going)?
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    if cut.is_empty() {
        return Err(StageError::new(
            None,
            stage("align"),
            Error::Alignment("no symbol has bars in range".into()),
        )
        .into());
    }
    let panel = union_align(&cut).map_err(|e| StageError::new(None, stage("align"), e))?;
    let results: Vec<_> = panel
        .symbol_names()
        .into_par_iter()
        .map(|s| {
            let r = symbol_slice(&panel, s, cfg).map_err(|e| StageError::new(Some(s), stage("features"), e));
            (s.to_string(), r)
        })
        .collect();
    let symbols = failures.absorb(results, opts.keep_going)?.into_iter().collect();
    Ok(Slice {
        name,
        range,
        panel,
        symbols,
    })
}

/// Ingests, adjusts, splits, aligns and computes features for the train
/// slice and, if `with_test`, the test slice. Only symbols that survive every
/// step on every built slice are kept.
pub fn prepare(cfg: &RunConfig, opts: &Options, with_test: bool, failures: &mut Failures) -> CliResult<Prepared> {
    let ingested = ingest_all(cfg, opts, failures)?;
    let mut train = build_slice("train", cfg.split.train(), &ingested, cfg, opts, failures)?;
    let test = if with_test {
        let mut test = build_slice("test", cfg.split.test(), &ingested, cfg, opts, failures)?;
        train.symbols.retain(|s, _| test.symbols.contains_key(s));
        test.symbols.retain(|s, _| train.symbols.contains_key(s));
        Some(test)
    } else {
        None
    };
    if train.symbols.is_empty() {
        return Err(StageError::new(None, "prepare", Error::InvalidInput("no symbol left to model".into())).into());
    }
    Ok(Prepared { ingested, train, test })
}

pub fn fit_models(
    prepared: &Prepared,
    train: &TrainConfig,
    opts: &Options,
    failures: &mut Failures,
) -> CliResult<BTreeMap<String, DecisionTreeModel>> {
    let results: Vec<_> = prepared
        .train
        .symbols
        .par_iter()
        .map(|(s, slice)| {
            let r = Dataset::from_features(&slice.features, &slice.labels)
                .and_then(|d| fit(&d, train))
                .map(|mut m| {
                    m.train_range = Some(prepared.train.range);
                    m
                })
                .map_err(|e| StageError::new(Some(s), "train", e));
            (s.clone(), r)
        })
        .collect();
    Ok(failures.absorb(results, opts.keep_going)?.into_iter().collect())
}

pub fn backtest_slice(
    slice: &Slice,
    models: &BTreeMap<String, DecisionTreeModel>,
    opts: &Options,
    failures: &mut Failures,
) -> CliResult<BTreeMap<String, BacktestResult>> {
    let results: Vec<_> = models
        .par_iter()
        .filter_map(|(s, model)| {
            let data = slice.symbols.get(s)?;
            let r = run_backtest(model, &data.features, &data.close, data.features.index())
                .map_err(|e| StageError::new(Some(s), format!("backtest ({})", slice.name), e));
            Some((s.clone(), r))
        })
        .collect();
    Ok(failures.absorb(results, opts.keep_going)?.into_iter().collect())
}

pub fn report_slice(
    slice: &Slice,
    results: &BTreeMap<String, BacktestResult>,
    cfg: &RunConfig,
) -> CliResult<PortfolioReport> {
    build_portfolio_report(results, &cfg.kpi)
        .map_err(|e| StageError::new(None, format!("report ({})", slice.name), e).into())
}

/// Everything computed for one depth.
pub struct Evaluation {
    pub models: BTreeMap<String, DecisionTreeModel>,
    pub backtests: [BTreeMap<String, BacktestResult>; 2],
    pub reports: [PortfolioReport; 2],
}

pub fn evaluate(
    prepared: &Prepared,
    cfg: &RunConfig,
    train: &TrainConfig,
    opts: &Options,
    failures: &mut Failures,
) -> CliResult<Evaluation> {
    let test = prepared.test.as_ref().expect("evaluation needs the test slice");
    let models = fit_models(prepared, train, opts, failures)?;
    let bt_train = backtest_slice(&prepared.train, &models, opts, failures)?;
    let bt_test = backtest_slice(test, &models, opts, failures)?;
    // a symbol must be backtested on both slices to be reported on either
    let keep = |a: &BTreeMap<String, BacktestResult>, b: &BTreeMap<String, BacktestResult>| {
        a.iter()
            .filter(|(s, _)| b.contains_key(*s))
            .map(|(s, r)| (s.clone(), r.clone()))
            .collect::<BTreeMap<_, _>>()
    };
    let (bt_train, bt_test) = (keep(&bt_train, &bt_test), keep(&bt_test, &bt_train));
    let models: BTreeMap<_, _> = models.into_iter().filter(|(s, _)| bt_train.contains_key(s)).collect();
    if models.is_empty() {
        return Err(StageError::new(None, "backtest", Error::InvalidInput("no symbol left to report".into())).into());
    }
    let r_train = report_slice(&prepared.train, &bt_train, cfg)?;
    let r_test = report_slice(test, &bt_test, cfg)?;
    Ok(Evaluation {
        models,
        backtests: [bt_train, bt_test],
        reports: [r_train, r_test],
    })
}

fn write_ingested(out: &Artifacts, prepared: &Prepared) -> CliResult<()> {
    let dir = out.dir("ingest")?;
    for s in &prepared.ingested {
        write_bars(dir.join(format!("{}.csv", s.symbol())), s)?;
    }
    Ok(())
}

fn write_panels(out: &Artifacts, prepared: &Prepared) -> CliResult<()> {
    for slice in prepared.slices() {
        write_panel(out.dir(&format!("panel/{}", slice.name))?, &slice.panel)?;
    }
    Ok(())
}

fn write_features(out: &Artifacts, prepared: &Prepared) -> CliResult<()> {
    for slice in prepared.slices() {
        let dir = out.dir(&format!("features/{}", slice.name))?;
        for (s, data) in &slice.symbols {
            write_feature_csv(dir.join(format!("{s}.csv")), &data.features, Some(&data.labels))?;
        }
    }
    Ok(())
}

fn write_models(out: &Artifacts, models: &BTreeMap<String, DecisionTreeModel>) -> CliResult<()> {
    for (s, model) in models {
        out.write("models", &format!("{s}.json"), &serialize(model))?;
        out.write("models", &format!("{s}.rules.txt"), &export_rules(model))?;
        out.write("models", &format!("{s}.dot"), &export_dot(model))?;
    }
    Ok(())
}

fn write_backtests(out: &Artifacts, eval: &Evaluation) -> CliResult<()> {
    for (name, results) in ["train", "test"].iter().zip(&eval.backtests) {
        let dir = out.dir(&format!("backtest/{name}"))?;
        for (s, r) in results {
            write_backtest_csv(dir.join(format!("{s}.csv")), r)?;
            write_trades_csv(dir.join(format!("{s}.trades.csv")), &r.trades)?;
        }
    }
    Ok(())
}

fn write_reports(out: &Artifacts, eval: &Evaluation, opts: &Options) -> CliResult<()> {
    for (name, report) in ["train", "test"].iter().zip(&eval.reports) {
        out.write("report", &format!("{name}.json"), &report.to_json())?;
        out.write("report", &format!("{name}.csv"), &report.to_csv())?;
        out.write(
            "report",
            &format!("{name}.txt"),
            &report.to_table_text(&format!("{name} set")),
        )?;
    }
    if opts.charts {
        for (name, results) in ["train", "test"].iter().zip(&eval.backtests) {
            let dir = format!("charts/{name}");
            for (file, svg) in charts::render_all(results)? {
                out.write(&dir, &file, &svg)?;
            }
        }
    }
    Ok(())
}

/// Runs the pipeline up to `stage` and writes that stage's artifacts (all of
/// model, backtest and report artifacts for [`Stage::Run`]).
pub fn run_stage(cfg: &RunConfig, stage: Stage, opts: &Options, out: &Artifacts) -> CliResult<()> {
    let pool = opts.pool()?;
    let mut failures = Failures::default();
    let result = pool.install(|| run_inner(cfg, stage, opts, out, &mut failures));
    finish(result, &failures, out)
}

fn run_inner(cfg: &RunConfig, stage: Stage, opts: &Options, out: &Artifacts, failures: &mut Failures) -> CliResult<()> {
    // training artifacts never look at the test range
    let prepared = prepare(cfg, opts, stage != Stage::Train, failures)?;
    match stage {
        Stage::Ingest => return write_ingested(out, &prepared),
        Stage::Align => return write_panels(out, &prepared),
        Stage::Features => return write_features(out, &prepared),
        Stage::Train => return write_models(out, &fit_models(&prepared, &cfg.train, opts, failures)?),
        _ => {}
    }
    let eval = evaluate(&prepared, cfg, &cfg.train, opts, failures)?;
    match stage {
        Stage::Backtest => write_backtests(out, &eval),
        Stage::Report => write_reports(out, &eval, opts),
        _ => {
            out.write("", "config.toml", &cfg.echo())?;
            write_models(out, &eval.models)?;
            write_backtests(out, &eval)?;
            write_reports(out, &eval, opts)
        }
    }
}

/// Turns recorded `--keep-going` failures into a failure list on disk and a
/// nonzero outcome.
pub(crate) fn finish(result: CliResult<()>, failures: &Failures, out: &Artifacts) -> CliResult<()> {
    if failures.0.is_empty() {
        return result;
    }
    let path = out.write("", "failures.txt", &failures.report())?;
    result?;
    Err(CliError::Partial {
        count: failures.0.len(),
        path,
    })
}
