//! Run configuration read from a TOML file.
//!
//! ```toml
//! data_dir = "."                 # relative to this file
//! out_dir = "out"                # relative to this file, overridden by --out
//! universe = ["ALPHA", "BETA"]
//! adjustment = "auto"            # auto | none | required
//!
//! [split]
//! train_start = "2022-01-01T00:00:00+05:30"
//! train_end = "2023-01-01T00:00:00+05:30"
//! test_start = "2023-01-01T00:00:00+05:30"
//! test_end = "2024-01-01T00:00:00+05:30"
//!
//! [features]   # return_lag_short, return_lag_medium, rsi_period, ...
//! [train]      # max_depth, min_samples_split, min_gain
//! [kpi]        # periods_per_year, risk_free_annual
//! ```
//!
//! Every table is optional; omitted keys take the defaults shown by
//! `RunConfig::echo`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use treetrade::cart::TrainConfig;
use treetrade::data::{SplitRanges, TimeRange};
use treetrade::features::FeatureSpec;
use treetrade::kpi::KpiConfig;
use treetrade::timefmt::{format_ts, parse_ts};

use crate::error::{CliError, CliResult};

/// How daily `SYMBOL.daily.csv` adjustment files are used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdjustmentMode {
    /// Adjust when the file exists.
    #[default]
    Auto,
    None,
    /// Every symbol must have a daily file.
    Required,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train_start: String,
    pub train_end: String,
    pub test_start: String,
    pub test_end: String,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            train_start: "2022-01-01T00:00:00+05:30".into(),
            train_end: "2023-01-01T00:00:00+05:30".into(),
            test_start: "2023-01-01T00:00:00+05:30".into(),
            test_end: "2024-01-01T00:00:00+05:30".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default = "default_data_dir")]
    data_dir: PathBuf,
    #[serde(default = "default_out_dir")]
    out_dir: PathBuf,
    universe: Vec<String>,
    #[serde(default)]
    adjustment: AdjustmentMode,
    #[serde(default)]
    split: SplitSection,
    #[serde(default)]
    features: FeatureSpec,
    #[serde(default)]
    train: TrainConfig,
    #[serde(default)]
    kpi: KpiConfig,
}

fn default_data_dir() -> PathBuf {
    PathBuf::from(".")
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub universe: Vec<String>,
    pub adjustment: AdjustmentMode,
    pub split: SplitRanges,
    pub features: FeatureSpec,
    pub train: TrainConfig,
    pub kpi: KpiConfig,
}

/// Settings that determine results, as written to `config.toml` in the
/// output directory.
#[derive(Debug, Serialize)]
struct Echo<'a> {
    universe: &'a [String],
    adjustment: AdjustmentMode,
    split: SplitSection,
    features: FeatureSpec,
    train: TrainConfig,
    kpi: KpiConfig,
}

fn parse_range(start: &str, end: &str, what: &str) -> CliResult<TimeRange> {
    let ts = |s: &str| parse_ts(s).map_err(|e| CliError::Config(format!("{what}: bad timestamp {s:?}: {e}")));
    TimeRange::new(ts(start)?, ts(end)?).map_err(|e| CliError::Config(format!("{what}: {e}")))
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    /// Parses and validates; relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> CliResult<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let split = SplitRanges::new(
            parse_range(&file.split.train_start, &file.split.train_end, "split.train")?,
            parse_range(&file.split.test_start, &file.split.test_end, "split.test")?,
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        let cfg = RunConfig {
            data_dir: base.join(file.data_dir),
            out_dir: base.join(file.out_dir),
            universe: file.universe,
            adjustment: file.adjustment,
            split,
            features: file.features,
            train: file.train,
            kpi: file.kpi,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn bars_path(&self, symbol: &str) -> PathBuf {
        self.data_dir.join(format!("{symbol}.csv"))
    }

    pub fn daily_path(&self, symbol: &str) -> PathBuf {
        self.data_dir.join(format!("{symbol}.daily.csv"))
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.universe.is_empty() {
            return Err(CliError::Config("universe is empty".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.universe {
            let valid = !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
            if !valid {
                return Err(CliError::Config(format!("invalid symbol name {s:?}")));
            }
            if !seen.insert(s) {
                return Err(CliError::Config(format!("symbol {s} listed twice")));
            }
            let bars = self.bars_path(s);
            if !bars.is_file() {
                return Err(CliError::Config(format!("{s}: bar file {} not found", bars.display())));
            }
            let daily = self.daily_path(s);
            if self.adjustment == AdjustmentMode::Required && !daily.is_file() {
                return Err(CliError::Config(format!(
                    "{s}: daily file {} not found",
                    daily.display()
                )));
            }
        }
        let core = |e: treetrade::Error| CliError::Config(e.to_string());
        self.features.validate().map_err(core)?;
        self.train.validate().map_err(core)?;
        self.kpi.validate().map_err(core)?;
        Ok(())
    }

    pub fn echo(&self) -> String {
        let (train, test) = (self.split.train(), self.split.test());
        let echo = Echo {
            universe: &self.universe,
            adjustment: self.adjustment,
            split: SplitSection {
                train_start: format_ts(&train.start),
                train_end: format_ts(&train.end),
                test_start: format_ts(&test.start),
                test_end: format_ts(&test.end),
            },
            features: self.features,
            train: self.train,
            kpi: self.kpi,
        };
        toml::to_string(&echo).expect("config echo serialises")
    }
}
