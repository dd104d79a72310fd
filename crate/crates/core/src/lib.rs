//! Optimal partitions of the round sphere into `O(m) x O(n)`-invariant
//! pieces and least-energy nodal solutions of the Yamabe equation.
//!
//! Invariant functions on `S^N` are profiles on the orbit interval `[0, pi]`,
//! so every problem here is one-dimensional:
//!
//! * [`scalar`]: least energy of the Yamabe problem on an orbit interval,
//!   plus a shooting integrator used as an independent check.
//! * [`system`]: the competitive `M`-component system and its continuation
//!   to strong repulsion, where the components segregate.
//! * [`partition`]: direct optimization over cut points, nodal assembly and
//!   the inequality checks relating the two approaches.

pub mod discretization;
pub mod error;
pub mod geometry;
mod linalg;
pub mod partition;
pub mod scalar;
pub mod shooting;
pub mod system;

pub use discretization::{OrbitGrid, ReducedFunction};
pub use error::{Error, Result};
pub use geometry::SymmetryConfig;
pub use scalar::{least_energy_on_interval, ScalarSolution, SolverOptions};
