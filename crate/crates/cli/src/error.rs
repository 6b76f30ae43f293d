use std::path::PathBuf;

use sarima_core::MonthStamp;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const PARSE: i32 = 2;
    pub const DATA: i32 = 3;
    pub const ESTIMATION: i32 = 4;
    pub const NO_ADMISSIBLE: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("schema: {0}")]
    Schema(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{category}: no observation for {month}")]
    MissingMonth { category: String, month: MonthStamp },
    #[error("line {line}: negative count {count}")]
    NegativeCount { line: u64, count: i64 },
    #[error("{0}")]
    Data(String),
    #[error("{category}: estimation failed: {message}")]
    Estimation { category: String, message: String },
    #[error("{category}: no admissible model: {message}")]
    NoAdmissible { category: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Schema(_) | CliError::Config(_) => {
                exit::PARSE
            }
            CliError::MissingMonth { .. } | CliError::NegativeCount { .. } | CliError::Data(_) => {
                exit::DATA
            }
            CliError::Estimation { .. } => exit::ESTIMATION,
            CliError::NoAdmissible { .. } => exit::NO_ADMISSIBLE,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
