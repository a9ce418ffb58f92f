use thiserror::Error;

/// Errors produced by codebook construction, channel sampling, and the
/// experiment runner.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is malformed or inconsistent with another argument.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The arguments are well formed but outside the supported regime.
    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    /// A factorization or inversion hit a non-positive pivot.
    #[error("numerical failure at pivot {pivot}: {reason}")]
    Numerical { pivot: usize, reason: String },

    /// The input carries no direction (e.g. an all-zero channel).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A closed-form bound was evaluated outside its domain of validity.
    #[error("bound precondition violated: {0}")]
    Precondition(String),

    /// An experiment configuration failed validation.
    #[error("config error: {0}")]
    Config(String),

    /// A run would exceed the desk-scale budget without explicit opt-in.
    #[error("long-run guard: {0}")]
    LongRun(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
