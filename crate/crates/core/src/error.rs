use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("size cap exceeded: {what} needs {requested}, cap is {cap}")]
    SizeCap {
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    #[error("pattern mismatch: {0}")]
    PatternMismatch(String),

    #[error("hypergeometric series does not terminate (no non-positive integer numerator)")]
    NonTerminating,

    #[error("hypergeometric denominator parameter {0} vanishes before the series terminates")]
    ZeroDenominator(String),

    #[error("matrix is not symmetric/Hermitian (asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has a materially negative eigenvalue {0:e}")]
    NegativeEigenvalue(f64),

    #[error("Jacobi eigensolver did not converge after {0} sweeps")]
    NotConverged(usize),

    #[error("Bose-Mesner closure failed: {0}")]
    ClosureFailure(String),

    #[error("quadrature residual {residual:e} exceeds tolerance {tolerance:e}")]
    Quadrature { residual: f64, tolerance: f64 },

    #[error("support detection ambiguous: eigenvalue {0:e} lies between 1e-12 and 1e-10")]
    SupportAmbiguity(f64),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid quantum object: {0}")]
    InvalidState(String),
}

pub type Result<T> = std::result::Result<T, Error>;
