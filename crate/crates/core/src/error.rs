use thiserror::Error;

use crate::shooting::OrbitRecord;

pub type Result<T> = std::result::Result<T, HillError>;

#[derive(Debug, Error)]
pub enum HillError {
    /// Input outside the domain of the operation (hyperbolic state, e >= 1, bad config, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation at a singular point of the potential (r = 0, collision).
    #[error("singularity: {0}")]
    Singularity(String),

    /// An iterative numerical procedure failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("integration failed: {0}")]
    Integration(String),

    /// Newton iteration on the symmetry residual stagnated; the last iterate is attached.
    #[error("no convergence after {iterations} Newton iterations (|psi| = {residual:.3e}): {reason}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        reason: String,
        last: Box<OrbitRecord>,
    },

    /// Continuation stopped early; `completed` holds every record solved before the failure.
    #[error("family continuation stopped at step {index}: {source}")]
    PartialFamily {
        index: usize,
        completed: Vec<OrbitRecord>,
        source: Box<HillError>,
    },
}

impl HillError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        HillError::Domain(msg.into())
    }
}
