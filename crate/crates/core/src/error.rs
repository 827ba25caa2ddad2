use thiserror::Error;

/// Errors raised by the simulator components.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A transform axis or vector length is not a power of two.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// Input lengths disagree with what the operation expects.
    #[error("size error: {0}")]
    Size(String),
    /// Invalid or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),
    /// A computation produced a non-finite value.
    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
