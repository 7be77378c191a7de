use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("steady state is not unique: kernel dimension {kernel_dim}")]
    DegenerateSteadyState { kernel_dim: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no signal: the collected emission rate is zero")]
    NoSignal,

    #[error("contrast undefined: orthogonal-polarisation level {0} is not positive")]
    UndefinedContrast(f64),

    #[error("no light: signal and background rates are all zero")]
    NoLight,

    #[error("no data: {0}")]
    NoData(String),

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("trajectory integration failed at t = {time_ps} ps: {message}")]
    IntegrationFailure { time_ps: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
