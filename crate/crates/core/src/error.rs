use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the solvers, sets and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two objects that must share an ambient dimension do not.
    DimensionMismatch { expected: usize, found: usize },
    /// A coordinate or function value is NaN or infinite.
    NonFinite(String),
    /// A point that must lie in the constraint set does not.
    Domain(String),
    /// Invalid solver configuration (step size, tolerances).
    Config(String),
    /// A precondition of an operation is violated.
    Precondition(String),
    /// Numerical failure: divergence, non-convergence, breakdown.
    Numeric(String),
    /// The set or operator does not provide the requested oracle.
    Capability(&'static str),
    /// Invalid parameters when building a set or operator.
    Construction(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NonFinite(what) => write!(f, "non-finite value: {what}"),
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::Config(what) => write!(f, "configuration error: {what}"),
            Error::Precondition(what) => write!(f, "precondition violated: {what}"),
            Error::Numeric(what) => write!(f, "numeric error: {what}"),
            Error::Capability(what) => write!(f, "capability unavailable: {what}"),
            Error::Construction(what) => write!(f, "invalid construction: {what}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
