//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the domain an operation supports.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or iterative scheme failed to reach its tolerance.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// An alternating series cancelled so heavily the result carries no
    /// usable precision; callers switch to a fallback path.
    #[error("cancellation: {0}")]
    Cancellation(String),

    /// A scenario or run description failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// File or serialization trouble in the CLI layer.
    #[error("i/o error: {0}")]
    Io(String),
}
