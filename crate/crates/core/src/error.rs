use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("row {row}, column `{column}`: expected 0 or 1, found `{value}`")]
    NonBinary {
        row: usize,
        column: String,
        value: String,
    },

    #[error("duplicate case id `{0}`")]
    DuplicateId(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("covariance matrix is singular; use a positive ridge")]
    SingularCovariance,

    #[error("{0}")]
    InvalidConfig(String),

    #[error("need at least {needed} cases, got {actual}")]
    TooFewCases { needed: usize, actual: usize },

    #[error("empty reference set")]
    EmptyReference,

    #[error("case `{0}` is present in its own reference database")]
    LeaveOneOutViolation(String),

    #[error("ROC needs both anomalous and normal labels")]
    SingleClass,

    #[error("metric file: {0}")]
    MetricFormat(String),

    #[error("config {config}, case `{case_id}`: {source}")]
    Evaluation {
        config: String,
        case_id: String,
        #[source]
        source: Box<Error>,
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
