use std::f64::consts::PI;
use std::sync::Arc;

use crate::discretization::{
    reduced_residual, residual_sup_away_from, residual_sup_near, weighted_crit_integral, OrbitGrid,
    ReducedFunction,
};
use crate::error::{Error, Result};
use crate::scalar::{least_energy_on_interval, ScalarSolution, CUT_MARGIN_CELLS};

use super::{IntervalPartition, PartitionSolver};

/// Sign-alternating sum of the interval solutions of a partition.
#[derive(Debug, Clone)]
pub struct NodalSolution {
    pub partition: IntervalPartition,
    pub pieces: Vec<ScalarSolution>,
    /// `sum_i (-1)^i w_i` on the base grid with the cuts inserted as nodes.
    pub signed_profile: ReducedFunction,
    pub total_energy: f64,
    pub sign_changes: usize,
    /// Strong-form residual sup at nodes at least three cells from every cut.
    pub residual_interior: f64,
    /// Strong-form residual sup at nodes closer than three cells to a cut.
    pub residual_near_cuts: f64,
}

impl NodalSolution {
    pub fn grid(&self) -> &Arc<OrbitGrid> {
        self.signed_profile.grid()
    }

    /// `(1/N) crit(|w|)` of the signed profile.
    pub fn crit_energy(&self) -> f64 {
        let cfg = self.grid().cfg();
        weighted_crit_integral(&self.signed_profile, cfg.p_crit()).unwrap_or(f64::NAN) / cfg.dim() as f64
    }
}

/// Solves every interval of `p` and glues the solutions with alternating signs.
pub fn assemble_nodal(p: &IntervalPartition, solver: &PartitionSolver) -> Result<NodalSolution> {
    let grid = solver.grid();
    p.check_resolved(grid)?;
    let pieces = p
        .intervals()
        .into_iter()
        .enumerate()
        .map(|(index, (a, b))| {
            least_energy_on_interval(grid, a, b, solver.options()).map_err(|e| Error::Interval {
                index,
                a,
                b,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fine = Arc::new(grid.with_cuts(p.cuts()));
    let mut values = vec![0.0; fine.len()];
    for (i, piece) in pieces.iter().enumerate() {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        for (v, e) in values.iter_mut().zip(piece.embed(&fine).values()) {
            *v += sign * e;
        }
    }
    let signed_profile = ReducedFunction::new(fine, values)?;
    let residual = reduced_residual(&signed_profile, (0.0, PI))?;
    Ok(NodalSolution {
        partition: p.clone(),
        total_energy: pieces.iter().map(|s| s.energy).sum(),
        sign_changes: signed_profile.sign_changes(),
        residual_interior: residual_sup_away_from(&residual, p.cuts(), CUT_MARGIN_CELLS),
        residual_near_cuts: residual_sup_near(&residual, p.cuts(), CUT_MARGIN_CELLS),
        signed_profile,
        pieces,
    })
}
