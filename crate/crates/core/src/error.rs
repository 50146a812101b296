use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("singular clock: path value {value} at t = {time}")]
    SingularClock { time: f64, value: f64 },

    #[error("clock level {level} beyond horizon {horizon}")]
    OutOfHorizon { level: f64, horizon: f64 },

    #[error("step budget of {0} exceeded")]
    BudgetExceeded(u64),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
