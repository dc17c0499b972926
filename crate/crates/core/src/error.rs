use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model or operation parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// A request reached outside the window a field was built for.
    #[error("request outside window: {0}")]
    Window(String),
    /// No open site was found within the search cap.
    #[error("no open site within l1 distance {cap} of {site:?} at time {k}")]
    Saturated { k: u32, site: Vec<i64>, cap: u64 },
    /// The restricted path space is empty (no admissible path).
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// An exhaustive oracle was asked for an instance above its size guard.
    #[error("instance too large for exhaustive enumeration: {size} > {limit}")]
    TooLarge { size: u128, limit: u128 },
    /// Configuration could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
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

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
