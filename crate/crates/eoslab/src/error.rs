use thiserror::Error;

#[derive(Debug, Error)]
pub enum EosError {
    /// Argument outside the valid domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Conditioning scheme selects no probability mass.
    #[error("conditioning error: {0}")]
    Conditioning(String),

    /// Numerical failure (non-convergence, truncation-order breakdown).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Invalid or inconsistent run configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EosError>;
