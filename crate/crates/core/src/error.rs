use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("conjugate gradient breakdown at iteration {iteration} (curvature {curvature:e})")]
    CgBreakdown { iteration: usize, curvature: f64 },
    #[error("partition error: {0}")]
    Partition(String),
    #[error("batch size {k} exceeds the {remaining} remaining candidates")]
    BatchSize { k: usize, remaining: usize },
    #[error("cannot rescale spectrum: {0}")]
    Rescale(String),
    #[error("kernel format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },
    #[error("enumeration of {count} subsets exceeds the limit of {limit}")]
    EnumerationTooLarge { count: u128, limit: u128 },
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps the error with a short description of where it happened.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for failures of the numerical kind (as opposed to usage errors).
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Numeric(_)
            | Error::NotPositiveDefinite { .. }
            | Error::CgBreakdown { .. }
            | Error::Rescale(_) => true,
            Error::Context { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
