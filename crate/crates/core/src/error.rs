use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("missing column(s): {}", .0.join(", "))]
    MissingColumns(Vec<String>),

    #[error("parse error at row {row}, column '{column}': cannot read '{value}' as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("target column '{column}': {message}")]
    Target { column: String, message: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("feature '{feature}' has empty group(s): {}", .categories.join(", "))]
    EmptyGroup {
        feature: String,
        categories: Vec<String>,
    },

    #[error("cannot stratify: {0}")]
    Stratify(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("single-class data: {0}")]
    SingleClass(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("no defined variance for metric '{0}' at any candidate")]
    NoDefinedVariance(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
