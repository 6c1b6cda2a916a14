use thiserror::Error;

/// Errors raised by the simulation and analysis primitives.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),
    /// A grid, kernel or measure specification is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),
    /// Evaluation at a singular point of a kernel.
    #[error("singularity: {0}")]
    Singular(String),
    /// The operation is not defined for this variant.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// An estimator received data with no spread.
    #[error("degenerate ensemble: {0}")]
    Degenerate(String),
    /// Input does not satisfy the operation's preconditions.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// An I/O failure while reading or writing dumps.
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
