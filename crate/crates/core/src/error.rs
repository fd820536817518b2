use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0} factors vs {1} factors")]
    DimensionMismatch(usize, usize),
    #[error("argument out of range: {0}")]
    Range(String),
    #[error("outside the domain: {0}")]
    Domain(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("resolution too coarse: {0}")]
    Resolution(String),
    #[error("quadrature did not reach tolerance: {0}")]
    Tolerance(String),
    #[error("capability exceeded: {0}")]
    Capability(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
