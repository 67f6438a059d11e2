use thiserror::Error;

/// Errors produced anywhere in the pipeline.
///
/// Variants are grouped by [`ErrorKind`] so front ends can map them onto
/// process exit codes without matching every case.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mapped column `{0}` is absent from the header")]
    MissingColumn(String),
    #[error("timestamp {current} ms at row {row} does not increase past {previous} ms")]
    NonMonotoneTimestamps { row: usize, previous: f64, current: f64 },
    #[error("recording contains no usable samples")]
    EmptyRecording,
    #[error("smoothing window {window} is invalid for a recording of {len} samples")]
    WindowTooLarge { window: usize, len: usize },
    #[error("smoothing window must be odd and >= 1, got {0}")]
    InvalidWindow(usize),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("class {0} has too few participants")]
    ClassMissing(String),
    #[error("training data contains only one class")]
    SingleClassInput,
    #[error("non-finite feature value at row {row}, column {column}")]
    NonFiniteFeature { row: usize, column: usize },
    #[error("solver did not converge after {iterations} iterations (KKT gap {gap:e})")]
    NotConverged { iterations: usize, gap: f64 },
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("rankings do not share one feature schema")]
    InconsistentSchema,
    #[error("amplitude budget infeasible: {0}")]
    BudgetInfeasible(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification of an [`Error`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::InvalidWindow(_) | Error::WindowTooLarge { .. } => {
                ErrorKind::Config
            }
            Error::NotConverged { .. } => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
