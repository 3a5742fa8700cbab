//! Crate-wide error type.
//!
//! Messages are single-line so the CLI can emit them machine-parsably.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or argument lies outside its mathematical domain.
    #[error("domain: {0}")]
    Domain(String),

    /// Vector or matrix sizes do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A computation produced NaN or infinity.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// An operation requires a stationary ARMA polynomial.
    #[error("non-stationary: {0}")]
    NonStationary(String),

    /// A series has no variation where variation is required.
    #[error("zero variance: {0}")]
    ZeroVariance(String),

    /// A matrix that must be invertible is singular.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// A data problem tied to a specific input row (1-based data rows).
    #[error("data row {row}: {message}")]
    DataRow { row: usize, message: String },

    /// A data problem not tied to a single row.
    #[error("data: {0}")]
    Data(String),

    /// Configuration or command-line input is invalid.
    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
