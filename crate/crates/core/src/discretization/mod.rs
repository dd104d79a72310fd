//! Discretization of the orbit interval.
//!
//! Profiles are continuous piecewise-linear on a node set of `[0, pi]` (or a
//! sub-interval). The energy norm is the exact finite-element quadratic form
//! against the weight `h`, and the nonlinear integrals use the lumped
//! `h`-moments of the hat functions. At `t = 0` and `t = pi` no boundary
//! condition is imposed; Dirichlet conditions at interior cut points are
//! imposed by restricting to a sub-grid whose end nodes are held at zero.
//!
//! Grid functions are continuous representatives; profiles of finite-energy
//! functions that are singular at the exceptional orbits cannot be expressed.

mod function;
mod grid;
mod integrals;
mod residual;

pub use function::{fmt_sig17, ReducedFunction};
pub use grid::{OrbitGrid, MIN_CELLS, SNAP_TOL};
pub use integrals::{l2_inner, weighted_crit_integral, weighted_h1_normsq, weighted_overlap};
pub use residual::{reduced_residual, residual_sup_away_from, residual_sup_near};

pub(crate) use integrals::{
    apply_energy_operator, check_exponents, crit_raw, normsq_raw, overlap_raw, pow_abs, signed_pow,
};

/// Builds a full orbit grid; see [`OrbitGrid::build`].
pub fn build_grid(
    cfg: crate::geometry::SymmetryConfig,
    cells: usize,
    grading: f64,
) -> crate::error::Result<std::sync::Arc<OrbitGrid>> {
    OrbitGrid::build(cfg, cells, grading)
}
