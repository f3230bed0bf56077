use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The input signal is too short for the requested operation.
    #[error("input too short: need {needed} samples, have {have}")]
    TooShort { needed: usize, have: usize },

    /// An estimator could not produce a usable result.
    #[error("estimate unavailable: {0}")]
    EstimateUnavailable(String),

    /// A model fit did not converge or had too little data.
    #[error("fit failed: {0}")]
    FitFailed(String),

    /// Malformed input data (GPS logs, IQ sidecars, CSV tables).
    #[error("data error: {0}")]
    Data(String),

    /// Bad pipeline or model configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
