use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use treetrade_cli::export::{export_tree, ExportFormat};
use treetrade_cli::sweep::{parse_depths, sweep_csv, sweep_depth};
use treetrade_cli::{run_stage, Artifacts, CliError, CliResult, Options, RunConfig, Stage};

#[derive(Parser)]
#[command(
    name = "treetrade",
    version,
    about = "Decision-tree trading rules on one-minute bars"
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Also write SVG equity and monthly-return charts.
    #[arg(long, global = true)]
    charts: bool,
    /// Skip failing symbols instead of aborting; failures go to failures.txt.
    #[arg(long, global = true)]
    keep_going: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read and adjust bars; writes ingest/SYMBOL.csv.
    Ingest,
    /// Split and align; writes panel/{train,test}/.
    Align,
    /// Compute features and labels; writes features/{train,test}/SYMBOL.csv.
    Features,
    /// Fit one tree per symbol; writes models/.
    Train,
    /// Backtest both slices; writes backtest/{train,test}/.
    Backtest,
    /// Portfolio reports; writes report/{train,test}.{json,csv,txt}.
    Report,
    /// Full pipeline: models, backtests, reports and a config echo.
    Run,
    /// Refit at several depths and tabulate test-slice results.
    SweepDepth {
        #[arg(long, default_value = "3,4,5,6")]
        depths: String,
    },
    /// Print a model as rule text or Graphviz DOT.
    ExportTree {
        /// Model JSON document.
        model: PathBuf,
        #[arg(long, value_enum, default_value = "rules")]
        format: ExportFormat,
    },
}

fn load_config(cli: &Cli) -> CliResult<(RunConfig, Artifacts)> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    let cfg = RunConfig::load(path)?;
    let out = Artifacts::new(cli.out.clone().unwrap_or_else(|| cfg.out_dir.clone()));
    Ok((cfg, out))
}

fn main_inner(cli: Cli) -> CliResult<()> {
    let opts = Options {
        jobs: cli.jobs,
        keep_going: cli.keep_going,
        charts: cli.charts,
    };
    let stage = match &cli.command {
        Command::Ingest => Stage::Ingest,
        Command::Align => Stage::Align,
        Command::Features => Stage::Features,
        Command::Train => Stage::Train,
        Command::Backtest => Stage::Backtest,
        Command::Report => Stage::Report,
        Command::Run => Stage::Run,
        Command::SweepDepth { depths } => {
            let depths = parse_depths(depths)?;
            let (cfg, out) = load_config(&cli)?;
            let rows = sweep_depth(&cfg, &depths, &opts, &out)?;
            print!("{}", sweep_csv(&rows));
            return Ok(());
        }
        Command::ExportTree { model, format } => {
            let (text, usage) = export_tree(model, *format)?;
            let usage = format!("features used: {}", usage.join(", "));
            match &cli.out {
                Some(path) => {
                    std::fs::write(path, text).map_err(|source| CliError::Write {
                        path: path.clone(),
                        source,
                    })?;
                    println!("{usage}");
                }
                None => {
                    print!("{text}");
                    eprintln!("{usage}");
                }
            }
            return Ok(());
        }
    };
    let (cfg, out) = load_config(&cli)?;
    run_stage(&cfg, stage, &opts, &out)?;
    eprintln!("wrote artifacts to {}", out.root().display());
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
