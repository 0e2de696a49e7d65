use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// A row the hourly parser refused, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowRejection {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("{path}: no data rows")]
    EmptyInput { path: PathBuf },

    #[error("duplicate timestamp {date} hour {hour}")]
    DuplicateTimestamp { date: NaiveDate, hour: u8 },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate target: response has zero variance")]
    DegenerateTarget,

    #[error("singular normal equations: non-positive pivot at column {pivot}")]
    Singular { pivot: usize },

    #[error("model file error: {0}")]
    ModelFile(String),

    #[error("unsupported model schema version {found} (supported: {supported})")]
    SchemaVersion { found: u32, supported: u32 },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }
}
