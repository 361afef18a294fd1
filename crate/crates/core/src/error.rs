use thiserror::Error;

/// Errors raised by estimation and inference routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TailError {
    /// Malformed arguments or data that violate a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An order-statistic rank or tuning index outside the admissible range.
    #[error("index out of range: {what} = {value}, admissible range {lo}..={hi}")]
    OutOfRange {
        what: &'static str,
        value: usize,
        lo: usize,
        hi: usize,
    },

    /// Tied order statistics make a self-normalizing denominator vanish.
    #[error("degenerate tail: {0}")]
    DegenerateTail(String),

    /// The requested procedure cannot be carried out at this sample size or level.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// First-stage metadata (T, p, sigma^2) needed by the operation is absent.
    #[error("missing metadata: {0}")]
    MissingMetadata(&'static str),
}

impl TailError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        TailError::InvalidInput(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        TailError::DegenerateTail(msg.into())
    }

    pub(crate) fn infeasible(msg: impl Into<String>) -> Self {
        TailError::Infeasible(msg.into())
    }

    /// True for failures caused by the data or the sample size rather than by the caller.
    pub fn is_computational(&self) -> bool {
        matches!(self, TailError::DegenerateTail(_) | TailError::Infeasible(_))
    }
}

pub type Result<T> = std::result::Result<T, TailError>;
