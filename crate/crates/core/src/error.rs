use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("uniform draw {0} is outside the open interval (0, 1)")]
    InvalidUniform(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("block length {block} does not divide sample size {n}")]
    NonDivisible { n: usize, block: usize },

    #[error("bound is undefined here: {0}")]
    DomainError(String),

    #[error("stationary covariance is not available for this process")]
    CovarianceUnavailable,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("config line {line}, field `{field}`: {msg}")]
    Config { line: usize, field: String, msg: String },

    #[error("malformed CSV at line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
