//! Error type shared across the library.

use thiserror::Error;

/// Errors surfaced by construction, generation, solving and checking.
#[derive(Debug, Error)]
pub enum Error {
    /// Two objects that must agree on dimension do not.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// A scalar or structural parameter is outside its admissible range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An input value violates a precondition (non-finite, negative, empty, ...).
    #[error("invalid input for {context}: {reason}")]
    InvalidInput { context: &'static str, reason: String },

    /// A combination of otherwise-valid pieces is not runnable.
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    /// Exhaustive search is only provided in low dimension.
    #[error("unsupported dimension {got} for {context} (max {max})")]
    UnsupportedDimension {
        context: &'static str,
        got: usize,
        max: usize,
    },

    /// A generated object failed one of its declared bound checks.
    #[error("bound violated at step {step}: {what} = {value} exceeds declared {bound}")]
    BoundViolated {
        step: usize,
        what: &'static str,
        value: f64,
        bound: f64,
    },

    /// Config file parsing / validation failure, with a field path.
    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    /// Filesystem and serialization problems from the harness.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV serialization problems from the harness.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Shorthand for `InvalidInput` with a formatted reason.
    pub fn invalid_input(context: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            context,
            reason: reason.into(),
        }
    }

    /// Shorthand for `InvalidParameter` with a formatted reason.
    pub fn invalid_parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
