use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("inconsistent design: {0}")]
    InconsistentDesign(String),

    /// The resolution index of a coefficient is undefined, so no threshold
    /// exists and the coefficient has to be zeroed by the caller.
    #[error("resolution index undefined for coefficient ({j}, {k})")]
    UndefinedResolution { j: u32, k: u64 },

    #[error("noise level cannot be estimated: {0}")]
    EstimationUnavailable(String),

    #[error("schedule infeasible: {0}")]
    ScheduleInfeasible(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
