//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed arguments: non-finite entries, shape mismatches, bad grids.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A requested construction violates a dimension inequality.
    #[error("infeasible design: {0}")]
    InfeasibleDesign(String),

    /// A channel matrix that a scheme must invert is rank deficient.
    #[error("singular channel: {0}")]
    SingularChannel(String),

    /// An effective scalar gain required to be nonzero vanished.
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    /// Channel resampling failed to produce a valid draw.
    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    /// An operation was invoked outside its (N, K) regime.
    #[error("wrong regime: {0}")]
    WrongRegime(String),

    /// Transmit power too low to build a nondegenerate constellation.
    #[error("power too low: {0}")]
    PowerTooLow(String),

    /// Brute-force enumeration would exceed the desk-scale budget.
    #[error("desk scale limit: {0}")]
    DeskScaleLimit(String),

    /// A covariance factorization failed even after jitter.
    #[error("numerical conditioning: {0}")]
    NumericalConditioning(String),

    /// Post-synthesis certification of a design failed.
    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
