use thiserror::Error;

/// Errors produced by the percoflow library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("vertex {0} is outside the window")]
    OutOfWindow(String),

    #[error(
        "power iteration did not converge after {iterations} iterations \
         (last estimate {estimate}, residual {residual:e})"
    )]
    NonConvergence {
        iterations: usize,
        estimate: f64,
        residual: f64,
    },

    #[error("stationary measure overflows past x = {last_safe}")]
    Saturation { last_safe: usize },

    #[error(
        "coupling mismatch at site {site}: covered = {covered}, exchange state = {chain_state}"
    )]
    CouplingMismatch {
        site: usize,
        covered: bool,
        chain_state: u64,
    },

    #[error("budget exceeded: {required} vertices per trial, limit {limit}")]
    BudgetExceeded { required: u128, limit: u128 },

    /// Raised when a window simulation of Z^n is meaningless because the
    /// lattice is covered almost surely.
    #[error("Z^{dim} is covered almost surely (moment of order {dim} diverges); refusing to simulate")]
    CoveredAlmostSurely { dim: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
