//! Command-line pipeline over a configured equity universe: ingest, align,
//! features, training, backtests, reports and the depth sweep.

pub mod charts;
pub mod config;
pub mod error;
pub mod export;
pub mod pipeline;
pub mod sweep;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use pipeline::{run_stage, Artifacts, Options, Stage};
