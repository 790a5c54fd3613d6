use thiserror::Error;

/// Errors raised by the simulator and the metric estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit count {n} outside supported range [{min}, {max}]")]
    Size { n: usize, min: usize, max: usize },

    #[error("qubit index {q} out of range for {n}-qubit register")]
    Index { q: usize, n: usize },

    #[error("basis index {x} out of range for dimension {dim}")]
    BasisIndex { x: usize, dim: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("ideal distribution is uniform; information fidelity is undefined")]
    DegenerateIdeal,

    #[error("correlator denominator {0:e} too small for a ratio")]
    DegenerateDenominator(f64),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
