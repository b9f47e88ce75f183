use thiserror::Error;

/// Errors surfaced by the numerical routines and the simulation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A root finder or bracket search failed.
    #[error("solver failure in {context}: {detail}")]
    Solver {
        context: &'static str,
        detail: String,
    },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature did not converge: estimate {estimate:e} > tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    /// A simulation request exceeds the configured resource limits.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn solver(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Solver {
            context,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
