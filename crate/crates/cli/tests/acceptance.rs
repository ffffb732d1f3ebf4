//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Set `TREETRADE_UPDATE_GOLDEN=1` to rewrite the golden report files.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use treetrade::backtest::{equity_curve, extract_trades, run_backtest, shift_signals, strategy_returns, SignalSeries};
use treetrade::cart::{fit, serialize, ClassCounts, Dataset, DecisionTreeModel, TrainConfig, TreeNode};
use treetrade::data::{union_align, Bar, BarSeries};
use treetrade::features::indicators as ind;
use treetrade::features::{build_features, build_labels, FeatureMatrix, FeatureSpec, FEATURE_NAMES};
use treetrade::kpi::{annualized_volatility, cagr, max_drawdown, sharpe, total_return, KpiConfig};
use treetrade_cli::RunConfig;
use treetrade_testkit::gen::{minute_index, random_bars, random_walk, rng, small_dataset};
use treetrade_testkit::{indicators as naive, kpi as naive_kpi, tree::greedy_tree};

const TREE_ORACLE_BUDGET: Duration = Duration::from_secs(10);
const SWEEP_BUDGET: Duration = Duration::from_secs(60);
const INDICATOR_TOL: f64 = 1e-9;
const SCALE_TOL: f64 = 1e-12;
const CAGR_TOL: f64 = 1e-12;
const SHARPE_TOL: f64 = 1e-9;
const LOG_ADDITIVITY_TOL: f64 = 1e-12;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn synthetic_config() -> PathBuf {
    workspace_root().join("data/synthetic/config.toml")
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn treetrade(args: &[&str]) -> Result<std::process::Output, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_treetrade"))
        .args(args)
        .output()
        .map_err(|e| format!("cannot launch treetrade: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "treetrade {} exited with {}: {}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out)
}

fn run_into(dir: &Path, extra: &[&str]) -> Result<(), String> {
    let config = synthetic_config();
    let mut args = vec![
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    treetrade(&args).map(|_| ())
}

fn features_of(bars: Vec<Bar>) -> FeatureMatrix {
    let panel = union_align(&[BarSeries::new("SYM", bars).unwrap()]).unwrap();
    build_features(&panel, "SYM", &FeatureSpec::default()).unwrap()
}

fn fit_on(bars: &[Bar], depth: usize) -> (FeatureMatrix, DecisionTreeModel) {
    let fm = features_of(bars.to_vec());
    let close: Vec<f64> = bars.iter().map(|b| b.close).collect();
    let index: Vec<_> = bars.iter().map(|b| b.timestamp).collect();
    let labels = build_labels("SYM", &close, &index, fm.index()).unwrap();
    let model = fit(
        &Dataset::from_features(&fm, &labels).unwrap(),
        &TrainConfig::with_depth(depth),
    )
    .unwrap();
    (fm, model)
}

fn same_shape(a: &TreeNode, b: &TreeNode) -> bool {
    match (a, b) {
        (
            TreeNode::Leaf {
                counts: c1,
                prediction: p1,
            },
            TreeNode::Leaf {
                counts: c2,
                prediction: p2,
            },
        ) => c1 == c2 && p1 == p2,
        (
            TreeNode::Internal {
                feature: f1,
                left: l1,
                right: r1,
                ..
            },
            TreeNode::Internal {
                feature: f2,
                left: l2,
                right: r2,
                ..
            },
        ) => f1 == f2 && same_shape(l1, l2) && same_shape(r1, r2),
        _ => false,
    }
}

fn tree_oracle() -> Outcome {
    let start = Instant::now();
    let names = ["ret_1", "rsi_14", "vol_14"];
    let mut r = rng(1);
    for case in 0..50 {
        let n = r.random_range(5..=100);
        let depth = r.random_range(1..=2);
        let (rows, labels) = small_dataset(&mut r, n, 3);
        let cfg = TrainConfig::with_depth(depth);
        let fitted = fit(&Dataset::from_rows(&names, &rows, &labels).unwrap(), &cfg).unwrap();
        let oracle = greedy_tree(&names, &rows, &labels, &cfg);
        ensure!(
            serialize(&fitted) == serialize(&oracle),
            "dataset {case} ({n} rows, depth {depth}) differs"
        );
    }
    let took = start.elapsed();
    ensure!(took < TREE_ORACLE_BUDGET, "took {took:?}");
    Ok(format!("50 datasets byte-identical in {took:.2?}"))
}

fn indicator_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let bars = random_bars(&mut rng(100 + seed), 1000);
        let h: Vec<f64> = bars.iter().map(|b| b.high).collect();
        let l: Vec<f64> = bars.iter().map(|b| b.low).collect();
        let c: Vec<f64> = bars.iter().map(|b| b.close).collect();
        let v: Vec<f64> = bars.iter().map(|b| b.volume).collect();
        let ret = ind::simple_returns(&c, 1).unwrap();
        let checks = [
            ("rsi", ind::rsi(&c, 14).unwrap(), naive::rsi(&c, 14)),
            ("adx", ind::adx(&h, &l, &c, 14).unwrap(), naive::adx(&h, &l, &c, 14)),
            (
                "sma_ratio",
                ind::sma_close_ratio(&c, 14).unwrap(),
                naive::sma_close_ratio(&c, 14),
            ),
            (
                "corr",
                ind::sma_close_corr(&c, 14).unwrap(),
                naive::sma_close_corr(&c, 14),
            ),
            (
                "volatility",
                ind::rolling_volatility(&ret, 14).unwrap(),
                naive::rolling_std(&naive::returns(&c, 1), 14),
            ),
            (
                "vwap_ratio",
                ind::vwap_close_ratio(&h, &l, &c, &v, 14).unwrap(),
                naive::vwap_close_ratio(&h, &l, &c, &v, 14),
            ),
        ];
        for (name, engine, oracle) in checks {
            let (diff, shape) = naive::max_abs_diff(&engine, &oracle);
            ensure!(shape, "{name}: undefined positions differ (seed {seed})");
            ensure!(diff <= INDICATOR_TOL, "{name}: diff {diff:e} (seed {seed})");
            worst = worst.max(diff);
        }
    }
    let up: Vec<f64> = (0..100).map(|i| 10.0 + i as f64).collect();
    ensure!(
        ind::rsi(&up, 14).unwrap()[14..].iter().all(|x| *x == 100.0),
        "monotone-up RSI is not 100"
    );
    let flat = vec![10.0; 100];
    ensure!(
        ind::adx(&flat, &flat, &flat, 14).unwrap()[27..]
            .iter()
            .all(|x| *x == 0.0),
        "flat ADX is not 0"
    );
    let corr = ind::sma_close_corr(&up, 14).unwrap();
    ensure!(
        corr[26..].iter().all(|x| (x - 1.0).abs() <= INDICATOR_TOL),
        "linear-trend correlation is not 1"
    );
    Ok(format!("6 indicators x 10 walks, worst diff {worst:.1e}; anchors hold"))
}

fn scale_invariance() -> Outcome {
    let mut worst = 0.0f64;
    for (seed, c) in [(1u64, 1e-3), (2, 0.37), (3, 2.0), (4, 123.456), (5, 1e5)] {
        let bars = random_bars(&mut rng(200 + seed), 800);
        let scaled: Vec<Bar> = bars
            .iter()
            .map(|b| Bar {
                open: b.open * c,
                high: b.high * c,
                low: b.low * c,
                close: b.close * c,
                ..*b
            })
            .collect();
        let (fa, ma) = fit_on(&bars, 4);
        let (fb, mb) = fit_on(&scaled, 4);
        for (k, name) in FEATURE_NAMES.iter().enumerate() {
            let (a, b) = (&fa.columns()[k], &fb.columns()[k]);
            let norm = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            let rel = if norm == 0.0 { diff } else { diff / norm };
            ensure!(rel <= SCALE_TOL, "{name} at c={c}: relative error {rel:e}");
            worst = worst.max(rel);
        }
        ensure!(same_shape(&ma.root, &mb.root), "tree structure changed at c={c}");
    }
    Ok(format!(
        "5 scale factors, worst relative error {worst:.1e}; trees identical"
    ))
}

fn no_lookahead() -> Outcome {
    let mut r = rng(300);
    let (_, model) = fit_on(&random_bars(&mut rng(301), 1500), 4);
    for case in 0..100 {
        let n = r.random_range(80..300);
        let bars = random_bars(&mut r, n);
        let t = r.random_range(28..n - 1);
        let tail = random_bars(&mut r, n);
        let mut other = bars.clone();
        for i in t + 1..n {
            other[i] = Bar {
                timestamp: bars[i].timestamp,
                ..tail[i]
            };
        }
        let (fa, fb) = (features_of(bars.clone()), features_of(other.clone()));
        let keep = t + 1 - fa.warmup_length();
        for (k, name) in FEATURE_NAMES.iter().enumerate() {
            let bits = |m: &FeatureMatrix| m.columns()[k][..keep].iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            ensure!(bits(&fa) == bits(&fb), "case {case}: {name} changed at or before t={t}");
        }
        let close = |b: &[Bar]| b[fa.warmup_length()..].iter().map(|x| x.close).collect::<Vec<_>>();
        let ra = run_backtest(&model, &fa, &close(&bars), fa.index()).unwrap();
        let rb = run_backtest(&model, &fb, &close(&other), fb.index()).unwrap();
        ensure!(
            ra.signals.values[..keep] == rb.signals.values[..keep],
            "case {case}: signal changed"
        );
        ensure!(
            ra.positions.values()[..keep] == rb.positions.values()[..keep],
            "case {case}: position changed"
        );
    }
    Ok("100 (series, t) pairs bit-exact".into())
}

fn kpi_closed_form() -> Outcome {
    let cfg = KpiConfig::default();
    ensure!(
        cfg.periods_per_year == 94500 && cfg.risk_free_annual == 0.072,
        "kpi defaults changed"
    );
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("X.csv"), "timestamp,open,high,low,close,volume\n").unwrap();
    let echo = RunConfig::from_toml("universe = [\"X\"]\n", dir.path())
        .map_err(|e| e.to_string())?
        .echo();
    ensure!(
        echo.contains("periods_per_year = 94500") && echo.contains("risk_free_annual = 0.072"),
        "config echo lacks defaults:\n{echo}"
    );
    let mut r = rng(400);
    for case in 0..100 {
        let n = r.random_range(2..400);
        let rets: Vec<f64> = (0..n).map(|_| r.random_range(-0.03..0.03)).collect();
        let eq = equity_curve(&rets, 1.0).unwrap();
        ensure!(
            max_drawdown(&eq).unwrap() == naive_kpi::brute_drawdown(&eq),
            "curve {case}: drawdown differs"
        );
    }
    let rets: Vec<f64> = (0..94501).map(|_| r.random_range(-0.001..0.00105)).collect();
    let eq = equity_curve(&rets, 1.0).unwrap();
    let (c, t) = (cagr(&eq, 94500, &cfg).unwrap(), total_return(&eq).unwrap());
    let rel = ((c - t) / t).abs();
    ensure!(rel <= CAGR_TOL, "cagr {c} vs total return {t}: {rel:e}");
    let alternating: Vec<f64> = (0..2000).map(|i| if i % 2 == 0 { 0.01 } else { -0.01 }).collect();
    for series in [alternating, rets] {
        let ds = (sharpe(&series, &cfg).unwrap() - naive_kpi::sharpe(&series, 94500.0, 0.072)).abs();
        let dv = (annualized_volatility(&series, &cfg).unwrap() - naive_kpi::volatility(&series, 94500.0)).abs();
        ensure!(
            ds <= SHARPE_TOL && dv <= SHARPE_TOL,
            "sharpe diff {ds:e}, volatility diff {dv:e}"
        );
    }
    Ok(format!(
        "drawdown exact on 100 curves; cagr rel err {rel:.1e}; sharpe/volatility match"
    ))
}

fn constant_model(prediction: u8) -> DecisionTreeModel {
    DecisionTreeModel {
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        config: TrainConfig::default(),
        train_range: None,
        root: TreeNode::Leaf {
            counts: ClassCounts::new(u64::from(prediction == 0), u64::from(prediction == 1)),
            prediction,
        },
    }
}

fn backtest_semantics() -> Outcome {
    let bars = random_bars(&mut rng(500), 600);
    let fm = features_of(bars.clone());
    let close: Vec<f64> = bars[fm.warmup_length()..].iter().map(|b| b.close).collect();
    let ones = run_backtest(&constant_model(1), &fm, &close, fm.index()).unwrap();
    ensure!(
        ones.strategy_equity[1..] == ones.benchmark_equity[1..],
        "all-ones is not buy-and-hold"
    );
    let zeros = run_backtest(&constant_model(0), &fm, &close, fm.index()).unwrap();
    ensure!(
        zeros.strategy_equity.iter().all(|e| *e == 1.0),
        "all-zeros curve is not flat"
    );

    let index = minute_index(3);
    let pos = shift_signals(&SignalSeries {
        index,
        values: vec![1, 0, 1],
    })
    .unwrap();
    let r = strategy_returns(&pos, &[100.0, 125.0, 80.0]).unwrap();
    ensure!(pos.values() == [0, 1, 0], "3-bar positions {:?}", pos.values());
    ensure!(r == [0.0, 0.25, 0.0], "3-bar returns {r:?}");
    ensure!(equity_curve(&r, 1.0).unwrap() == [1.0, 1.25, 1.25], "3-bar equity");

    let mut g = rng(501);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = g.random_range(5..1000);
        let close = random_walk(&mut g, n, 0.01);
        let values = (0..n).map(|_| u8::from(g.random_bool(0.55))).collect();
        let pos = shift_signals(&SignalSeries {
            index: minute_index(n),
            values,
        })
        .unwrap();
        let ret = strategy_returns(&pos, &close).unwrap();
        let trades = extract_trades(&pos, &ret).unwrap();
        let by_trade: f64 = trades.iter().map(|t| t.trade_return.ln_1p()).sum();
        let by_bar: f64 = ret.iter().map(|x| x.ln_1p()).sum();
        worst = worst.max((by_trade - by_bar).abs());
    }
    ensure!(worst <= LOG_ADDITIVITY_TOL, "log-additivity off by {worst:e}");
    Ok(format!(
        "buy-and-hold, flat, 3-bar example exact; log-additivity within {worst:.1e}"
    ))
}

const TABLE_METRICS: [&str; 9] = [
    "Sharpe Ratio",
    "Total Return [%]",
    "CAGR [%]",
    "Max Drawdown [%]",
    "Win Rate [%]",
    "Profit Factor",
    "Volatility [%]",
    "PSBBR [%]",
    "PSBBS [%]",
];

fn report_shape(report: &serde_json::Value) -> Result<(), String> {
    let table = report["table"].as_array().ok_or("report has no table")?;
    let names: Vec<&str> = table.iter().filter_map(|r| r["metric"].as_str()).collect();
    ensure!(names == TABLE_METRICS, "table metrics {names:?}");
    for row in table {
        let keys: Vec<&String> = row.as_object().ok_or("row is not an object")?.keys().collect();
        ensure!(
            keys == ["benchmark", "flag", "metric", "strategy"],
            "row columns {keys:?}"
        );
    }
    for i in [4, 5, 7, 8] {
        ensure!(
            table[i]["benchmark"] == "NA",
            "{} benchmark is {}",
            TABLE_METRICS[i],
            table[i]["benchmark"]
        );
    }
    Ok(())
}

fn table_shape_golden() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    run_into(dir.path(), &[])?;
    let update = std::env::var_os("TREETRADE_UPDATE_GOLDEN").is_some();
    let mut compared = 0;
    for slice in ["train", "test"] {
        let json = std::fs::read_to_string(dir.path().join(format!("report/{slice}.json"))).unwrap();
        report_shape(&serde_json::from_str(&json).map_err(|e| e.to_string())?).map_err(|e| format!("{slice}: {e}"))?;
        let text = std::fs::read_to_string(dir.path().join(format!("report/{slice}.txt"))).unwrap();
        ensure!(
            text.lines().count() == 11,
            "{slice}.txt has {} lines",
            text.lines().count()
        );
        ensure!(
            text.lines().nth(1).unwrap().split_whitespace().collect::<Vec<_>>()
                == ["KPI", "Benchmark", "Strategy", "Under/Overperforms"],
            "{slice}.txt header"
        );
        for ext in ["json", "csv", "txt"] {
            let name = format!("{slice}.{ext}");
            let actual = std::fs::read(dir.path().join("report").join(&name)).unwrap();
            let golden = golden_dir().join(&name);
            if update {
                std::fs::create_dir_all(golden_dir()).unwrap();
                std::fs::write(&golden, &actual).unwrap();
            }
            let expected = std::fs::read(&golden).map_err(|e| format!("{}: {e}", golden.display()))?;
            ensure!(actual == expected, "{name} differs from golden file");
            compared += 1;
        }
    }
    Ok(format!(
        "nine rows with NA benchmark cells; {compared} golden files match"
    ))
}

fn parse_csv(text: &str) -> Vec<BTreeMap<String, String>> {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap_or("").split(',').map(str::to_string).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(str::to_string)).collect())
        .collect()
}

fn depth_sweep() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let config = synthetic_config();
    let start = Instant::now();
    treetrade(&[
        "sweep-depth",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out,
        "--depths",
        "3,4,5,6",
    ])?;
    let took = start.elapsed();
    ensure!(took < SWEEP_BUDGET, "sweep took {took:?}");
    let rows = parse_csv(&std::fs::read_to_string(dir.path().join("sweep/depth_sweep.csv")).unwrap());
    let depths: Vec<&str> = rows.iter().map(|r| r["depth"].as_str()).collect();
    ensure!(depths == ["3", "4", "5", "6"], "sweep depths {depths:?}");

    let single = dir.path().join("single");
    run_into(&single, &[])?;
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(single.join("report/test.json")).unwrap()).unwrap();
    let avg = &report["average_portfolio"]["strategy"];
    let row = &rows[1];
    for key in [
        "sharpe",
        "profit_factor",
        "total_return",
        "cagr",
        "max_drawdown",
        "win_rate",
        "volatility",
    ] {
        let expected = match &avg[key] {
            serde_json::Value::String(s) => s.clone(),
            v => v.as_f64().map(|x| x.to_string()).unwrap_or_default(),
        };
        ensure!(
            row[key] == expected,
            "depth-4 {key}: sweep {} vs run {expected}",
            row[key]
        );
    }
    let per_symbol = report["per_symbol"].as_object().unwrap();
    let beats = |key: &str| {
        per_symbol
            .values()
            .filter(|p| p["strategy"][key].as_f64() > p["benchmark"][key].as_f64())
            .count()
            .to_string()
    };
    ensure!(
        row["beat_total_return"] == beats("total_return"),
        "beat_total_return differs"
    );
    ensure!(row["beat_sharpe"] == beats("sharpe"), "beat_sharpe differs");
    Ok(format!("4 rows in {took:.2?}; depth-4 row equals standalone run"))
}

fn artifact_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    files
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_into(&a, &["--charts", "--jobs", "1"])?;
    run_into(&b, &["--charts", "--jobs", "4"])?;
    let (ta, tb) = (artifact_tree(&a), artifact_tree(&b));
    ensure!(ta.keys().eq(tb.keys()), "file sets differ");
    for (path, bytes) in &ta {
        ensure!(tb[path] == *bytes, "{} differs", path.display());
    }
    Ok(format!(
        "{} artifacts byte-identical across runs (1 vs 4 workers)",
        ta.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("tree-oracle equivalence", tree_oracle),
        ("indicator-oracle equivalence", indicator_oracle),
        ("scale invariance", scale_invariance),
        ("no lookahead", no_lookahead),
        ("kpi closed forms", kpi_closed_form),
        ("backtest semantics", backtest_semantics),
        ("report table shape", table_shape_golden),
        ("depth sweep", depth_sweep),
        ("end-to-end determinism", determinism),
    ];
    // skip the libtest flags cargo passes to every test binary
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
