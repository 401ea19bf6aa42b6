use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Band-selection constraints cannot be satisfied.
    #[error("infeasible constraints: {0}")]
    Infeasible(String),

    /// The exhaustive solver refused an instance that is too large.
    #[error("instance too large for exhaustive search: {0}; use the greedy solver")]
    TooLarge(String),

    /// A post-condition that should hold by construction was violated.
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
