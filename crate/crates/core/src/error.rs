use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The exponent lies outside the regime where the requested object exists.
    #[error("regime error: {0}")]
    Regime(String),

    /// Adaptive integration failed; carries the last radius (or time) reached.
    #[error("integration error at {last_valid}: {reason}")]
    Integration { last_valid: f64, reason: String },

    /// A root or intersection could not be bracketed.
    #[error("search error: {0}")]
    Search(String),

    /// The mesh does not satisfy the requirements of the operation.
    #[error("mesh error: {0}")]
    Mesh(String),

    /// A time step violates the monotonicity restriction of the scheme.
    #[error("step error: dt = {dt} exceeds the monotone bound {bound}")]
    Step { dt: f64, bound: f64 },

    /// The requested computation is too ill-conditioned to be trusted.
    #[error("conditioning error: {0}")]
    Conditioning(String),

    /// A precondition on the inputs does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn regime(msg: impl Into<String>) -> Self {
        Error::Regime(msg.into())
    }

    /// True for failures of the numerics, as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Integration { .. } | Error::Search(_) | Error::Conditioning(_)
        )
    }
}
