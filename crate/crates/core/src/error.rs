use thiserror::Error;

use crate::discretization::ReducedFunction;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("orbit at angle {0} is degenerate (expected 0 < a < pi)")]
    DegenerateOrbit(f64),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("functions live on different grids")]
    GridMismatch,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The iteration budget ran out. Carries the last iterate so callers can
    /// inspect or warm-start from it.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        last: Box<ReducedFunction>,
    },

    #[error("Nehari projection failed: {0}")]
    Projection(String),

    #[error("component {component} collapsed (norm^2 {normsq:.3e} < floor {floor:.3e})")]
    Collapse {
        component: usize,
        normsq: f64,
        floor: f64,
    },

    #[error("segregation incomplete: {0}")]
    SegregationIncomplete(String),

    #[error("partition degenerated: {0}")]
    Degeneracy(String),

    #[error("interval {index} ({a:.6}, {b:.6}) failed: {source}")]
    Interval {
        index: usize,
        a: f64,
        b: f64,
        #[source]
        source: Box<Error>,
    },
}
