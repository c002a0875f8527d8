use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Operands act on a different number of sites, or a vector does not
    /// match the Hilbert-space dimension.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// A dense or sparse realization was requested beyond the documented
    /// size limit.
    #[error("capacity exceeded: {what} supports at most {limit} sites, got {n_sites}")]
    Capacity {
        what: &'static str,
        limit: usize,
        n_sites: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unsupported mapping: {0}")]
    UnsupportedMapping(String),

    /// An iterative solver ran out of iterations. `residual` is the solver's
    /// own progress measure at exit (eigen-residual norm for Lanczos, energy
    /// change per check for TEBD).
    #[error("no convergence in {what} after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("expectation value of a Hermitian operator has imaginary part {0:.3e}")]
    NonHermitian(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
