use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("unknown value `{value}` for attribute `{attribute}`")]
    UnknownValue { attribute: String, value: String },

    #[error("attribute `{0}` given more than once")]
    DuplicateAttribute(String),

    #[error("malformed element `{0}`: expected attr=value pairs joined by `&`")]
    MalformedElement(String),

    #[error("dimension mismatch: expected {expected} coordinates, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("duplicate leaf `{0}`")]
    DuplicateLeaf(String),

    #[error("negative measure value {value} in leaf {row}")]
    NegativeValue { row: usize, value: f64 },

    #[error("table has no leaves")]
    EmptyTable,

    #[error("no overall anomaly: actual and forecast totals are equal ({0})")]
    NoOverallAnomaly(f64),

    #[error("element space size overflows u128")]
    Overflow,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("unknown instance `{0}`")]
    UnknownInstance(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
