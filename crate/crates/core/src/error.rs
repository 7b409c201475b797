use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// An integrand did not decay at one end of the log-radius grid.
    #[error("truncation unreliable at the {side} end of the grid (tail estimate {tail:e})")]
    TruncationUnreliable { side: &'static str, tail: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// CKN parameters outside the region where the radial Gamma-formula is the sharp constant.
    #[error("sharp constant unavailable: {0}")]
    ConstantUnavailable(String),

    #[error("flow step failed: {0}")]
    Flow(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

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
