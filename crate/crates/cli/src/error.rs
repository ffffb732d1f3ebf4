use std::fmt;
use std::path::PathBuf;

/// Where in the pipeline a failure happened.
#[derive(Debug, thiserror::Error)]
pub struct StageError {
    pub symbol: Option<String>,
    pub stage: String,
    #[source]
    pub source: treetrade::Error,
}

impl StageError {
    pub fn new(symbol: Option<&str>, stage: impl Into<String>, source: treetrade::Error) -> Self {
        StageError {
            symbol: symbol.map(str::to_string),
            stage: stage.into(),
            source,
        }
    }
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.symbol {
            Some(s) => write!(f, "{s}: {} failed: {}", self.stage, self.source),
            None => write!(f, "{} failed: {}", self.stage, self.source),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Stage(#[from] StageError),
    #[error("{} symbol(s) failed; see {}", .count, .path.display())]
    Partial { count: usize, path: PathBuf },
    #[error("cannot read {}: {source}", .path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", .path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] treetrade::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
