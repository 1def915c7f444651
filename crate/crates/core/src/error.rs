//! Error type shared by all modules.

use alloc::string::String;
use core::fmt;

/// Failure modes of the estimation and simulation routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input violated its contract (empty vector, non-finite entry,
    /// out-of-range parameter, mismatched observation kind, ...).
    InvalidInput(String),
    /// The bandwidth solver exhausted its iteration budget. Carries the
    /// last bracket examined so the caller can inspect it.
    SolverFailure {
        lower: f64,
        upper: f64,
        iterations: usize,
    },
    /// A saddle prior variance was requested at a unit weight outside the
    /// all-pass head; the variance would be infinite.
    SingularVariance { index: usize },
    /// A ratio estimator hit a nonpositive denominator (or an otherwise
    /// undefined value). `raw` is the unclamped ratio so the caller can
    /// decide whether to reject the replication or clamp it.
    Degenerate { raw: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::SolverFailure {
                lower,
                upper,
                iterations,
            } => write!(
                f,
                "bandwidth solver failed after {iterations} iterations (last bracket [{lower}, {upper}])"
            ),
            Error::SingularVariance { index } => {
                write!(f, "prior variance is infinite at index {index} (unit weight)")
            }
            Error::Degenerate { raw } => {
                write!(f, "degenerate estimate (nonpositive denominator), raw ratio {raw}")
            }
        }
    }
}

#[cfg(any(test, feature = "std"))]
impl std::error::Error for Error {}
