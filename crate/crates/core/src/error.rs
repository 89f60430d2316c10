//! Crate-wide error type and result alias.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad hyperparameter, inconsistent options.
    #[error("config: {0}")]
    Config(String),

    /// Invalid value fed to a numeric kernel: non-finite score, empty list,
    /// index out of range.
    #[error("domain: {0}")]
    Domain(String),

    /// Dataset problem: unreadable input, no valid lines, split mismatch.
    #[error("data: {0}")]
    Data(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed or incompatible artifact (checkpoint, manifest).
    #[error("artifact: {0}")]
    Artifact(String),

    /// A statistical verification experiment failed its assertion.
    #[error("verification: {0}")]
    Verification(String),

    /// Training produced a non-finite loss; the message names the batch.
    #[error("non-finite loss: {0}")]
    NonFinite(String),
}
