use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("gradient is undefined at the origin")]
    GradientAtOrigin,

    #[error("failed to bracket a root of {what}")]
    BracketFailure { what: String },

    #[error("pole encountered while evaluating {what} at {at}")]
    PoleEncountered { what: String, at: f64 },

    #[error("eta = {eta} lies outside the admissible interval ({lo}, {hi})")]
    EtaOutOfRange { eta: f64, lo: f64, hi: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: String, iterations: usize },

    #[error("denominator of {what} is numerically zero")]
    SingularDenominator { what: String },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
