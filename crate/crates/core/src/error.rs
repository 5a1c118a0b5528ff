use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spin {0}: 2J must be a positive integer")]
    InvalidSpin(f64),

    #[error("twin-Fock requires integer J, got J = {0}")]
    TwinFockHalfInteger(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state is not normalized: |psi|^2 = {0}")]
    NotNormalized(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown operator kind `{0}`")]
    UnknownOperator(String),

    #[error("propagation failed: {0}")]
    Propagation(String),

    #[error("metric `{metric}` is undefined at J = {j}")]
    MetricUndefined { metric: String, j: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("rank-deficient Jacobian in {0} fit")]
    RankDeficient(String),

    #[error("fit did not converge after {iterations} iterations (rss = {rss:e})")]
    NotConverged { iterations: usize, rss: f64 },

    #[error("model domain violation: {0}")]
    Domain(String),

    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
