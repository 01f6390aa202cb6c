use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Parameters outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Requested size exceeds a configured computational cap.
    #[error("size limit exceeded: {what} needs n = {n}, limit is {limit}")]
    SizeLimit { what: &'static str, n: u32, limit: u32 },

    #[error("normalization mismatch: trace is {trace}, expected 1")]
    Normalization { trace: String },

    /// An outcome with vanishing probability but nonzero derivative.
    #[error("singular point at theta = {theta}: outcome {outcome} has P = {probability:e}, dP = {derivative:e}")]
    SingularPoint { theta: f64, outcome: String, probability: f64, derivative: f64 },

    #[error("likelihood has {count} comparable maxima in [{lo}, {hi}]")]
    DegenerateLikelihood { count: usize, lo: f64, hi: f64 },

    /// Input to a numerical oracle failed its own consistency check.
    #[error("invalid spectral input: {0}")]
    Spectral(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
