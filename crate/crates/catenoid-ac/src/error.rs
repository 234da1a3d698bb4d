//! Error taxonomy shared by every module of the crate.

use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation (e.g. a radius
    /// at or below the catenoid neck).
    #[error("domain: {0}")]
    Domain(String),

    /// Structurally invalid argument (empty grid, mismatched lengths, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A state invariant does not hold (unordered layer radii, Gram matrix
    /// not diagonally dominant, ...).
    #[error("invalid state: {0}")]
    State(String),

    /// A numerical procedure failed to converge or lost all precision.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Time integration had to stop before reaching the target time.
    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    /// Interface extraction found the wrong number of zero crossings.
    #[error("expected {expected} interface crossings, found {found}")]
    Topology { expected: usize, found: usize },

    /// A run configuration is inconsistent or cannot be honored.
    #[error("configuration: {0}")]
    Config(String),

    /// The PDE solution left the diagnostic envelope |v| <= 1.5.
    #[error("solution blew up at t = {t}: max |v| = {max_abs}")]
    BlowUp { t: f64, max_abs: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
