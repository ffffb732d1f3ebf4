use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("invalid bar at {timestamp}: {message}")]
    InvalidBar { timestamp: String, message: String },

    #[error("adjustment factors: {0}")]
    Adjustment(String),

    #[error("alignment: {0}")]
    Alignment(String),

    #[error("split: {0}")]
    Split(String),

    #[error("series too short: {what} needs at least {needed} values, got {got}")]
    TooShort {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("model: {0}")]
    Model(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
