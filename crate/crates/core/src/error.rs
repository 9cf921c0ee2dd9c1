use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("cannot align calendars: no common date range for symbols {symbols:?}")]
    Alignment { symbols: Vec<String> },

    #[error("symbol {symbol} has zero rank variance")]
    ZeroVariance { symbol: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("eigen-decomposition failed: {0}")]
    Decomposition(String),

    #[error("infeasible synthetic market: {0}")]
    Infeasible(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Alignment { .. } => "alignment",
            Error::ZeroVariance { .. } => "zero_variance",
            Error::InvalidInput(_) => "invalid_input",
            Error::Decomposition(_) => "decomposition",
            Error::Infeasible(_) => "infeasible",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
