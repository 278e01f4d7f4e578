use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Rates or sizes that make the model ill-defined.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    /// A transition referred to a node outside the network, or gossiped to itself.
    #[error("invalid transition: {0}")]
    InvalidTransition(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Csv(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
