use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discretization::{OrbitGrid, ReducedFunction};
use crate::error::{Error, Result};
use crate::linalg::energy_operator;
use crate::scalar::nehari_scale;

use super::{
    coupling_potential, euclidean_gradient, project_to_system_nehari, system_energy, CouplingMatrix,
    EnergyReport, SystemState,
};

const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemOptions {
    pub max_iters: usize,
    /// Relative decrease of `J` per step below which the descent stops.
    pub tol_energy: f64,
    /// Smallest admissible `|w_i|^2` of a converged component; `None` only
    /// rules out vanishing components.
    pub d_floor: Option<f64>,
    pub max_restarts: usize,
    /// Seed for the shifted supports used by restarts after the first.
    pub seed: u64,
}

impl Default for SystemOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            tol_energy: 1e-12,
            d_floor: None,
            max_restarts: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SystemSolution {
    pub state: SystemState,
    pub report: EnergyReport,
    pub iterations: usize,
    /// False when the iteration budget ran out before the energy settled.
    pub converged: bool,
    pub restarts: usize,
}

/// Disjoint sine bumps on `M` equal sub-intervals of `(0, pi)`, each on its
/// own Nehari set.
pub fn initial_state(grid: &Arc<OrbitGrid>, coupling: &CouplingMatrix) -> Result<SystemState> {
    let m = coupling.components();
    let cuts: Vec<f64> = (0..=m).map(|i| PI * i as f64 / m as f64).collect();
    bumps_on(grid, coupling, &cuts)
}

fn bumps_on(grid: &Arc<OrbitGrid>, coupling: &CouplingMatrix, cuts: &[f64]) -> Result<SystemState> {
    let comps = cuts
        .windows(2)
        .map(|w| {
            let b = ReducedFunction::bump(grid.clone(), w[0], w[1]);
            if b.is_zero() {
                return Err(Error::Resolution(format!(
                    "no grid node inside ({:.4}, {:.4}) for an initial bump",
                    w[0], w[1]
                )));
            }
            Ok(b.scaled(nehari_scale(&b)?))
        })
        .collect::<Result<Vec<_>>>()?;
    SystemState::new(comps, coupling.clone())
}

/// Minimizes the system energy over its Nehari set, starting from `init`.
///
/// Each step moves every component along its gradient preconditioned by
/// `A + diag(mass * V_i)`, where `V_i` is the coupling potential, then takes
/// absolute values and projects back onto the Nehari set. Step sizes follow
/// an Armijo rule on `J`; a step whose projection fails is shortened.
pub fn minimize_system(
    grid: &Arc<OrbitGrid>,
    coupling: &CouplingMatrix,
    init: &SystemState,
    opts: &SystemOptions,
) -> Result<SystemSolution> {
    if !init.components()[0].same_grid(&ReducedFunction::zeros(grid.clone())) {
        return Err(Error::GridMismatch);
    }
    let init = init.with_coupling(coupling.clone())?;
    if !init.is_fully_nontrivial(0.0) {
        return Err(Error::Degenerate("initial state has a vanishing component".into()));
    }
    let floor = opts.d_floor.unwrap_or(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start = init;
    let mut total_iters = 0;
    for restart in 0..=opts.max_restarts {
        let (state, iterations, converged) = descend(grid, start, opts)?;
        total_iters += iterations;
        let report = system_energy(&state);
        let weakest = report
            .per_component_normsq
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
        if weakest.1 > floor && weakest.1 > 0.0 {
            return Ok(SystemSolution {
                state,
                report,
                iterations: total_iters,
                converged,
                restarts: restart,
            });
        }
        if restart == opts.max_restarts {
            return Err(Error::Collapse {
                component: weakest.0,
                normsq: weakest.1,
                floor,
            });
        }
        // Re-separate: equal sub-intervals first, then randomly shifted cuts.
        start = if restart == 0 {
            initial_state(grid, coupling)?
        } else {
            let m = coupling.components();
            let mut cuts: Vec<f64> = (0..=m)
                .map(|i| {
                    let base = PI * i as f64 / m as f64;
                    if i == 0 || i == m {
                        base
                    } else {
                        base + rng.gen_range(-0.25..0.25) * PI / m as f64
                    }
                })
                .collect();
            cuts.sort_by(f64::total_cmp);
            bumps_on(grid, coupling, &cuts)?
        };
    }
    unreachable!("the restart loop always returns")
}

fn descend(grid: &Arc<OrbitGrid>, init: SystemState, opts: &SystemOptions) -> Result<(SystemState, usize, bool)> {
    let m = init.coupling().components();
    let mass = grid.measure_weights();
    let mut state = project_to_system_nehari(&init)?;
    let mut energy = system_energy(&state).total_j;
    let mut tau = 1.0f64;
    let mut small_steps = 0;
    for it in 0..opts.max_iters {
        let mut grads = Vec::with_capacity(m);
        let mut dirs = Vec::with_capacity(m);
        for i in 0..m {
            let g = euclidean_gradient(&state, i);
            let extra: Vec<f64> = coupling_potential(&state, i).iter().zip(mass).map(|(v, w)| v * w).collect();
            let op = energy_operator(grid, 0..grid.len(), Some(&extra));
            let d = op
                .solve_dominant(&g)
                .ok_or_else(|| Error::Degenerate("singular preconditioner".into()))?;
            grads.push(g);
            dirs.push(d);
        }
        let slope: f64 = grads
            .iter()
            .zip(&dirs)
            .map(|(g, d)| g.iter().zip(d).map(|(a, b)| a * b).sum::<f64>())
            .sum();
        if !(slope > 0.0) {
            return Ok((state, it, true));
        }
        let mut accepted = None;
        while tau >= 1e-14 {
            let comps: Vec<ReducedFunction> = state
                .components()
                .iter()
                .zip(&dirs)
                .map(|(w, d)| {
                    let v = w.values().iter().zip(d).map(|(a, b)| (a - tau * b).abs()).collect();
                    ReducedFunction::from_raw(grid.clone(), v)
                })
                .collect();
            if comps.iter().all(|c| !c.is_zero()) {
                let trial = SystemState::new(comps, state.coupling().clone())?;
                if let Ok(projected) = project_to_system_nehari(&trial) {
                    let e = system_energy(&projected).total_j;
                    if e <= energy - ARMIJO * tau * slope {
                        accepted = Some((projected, e));
                        break;
                    }
                }
            }
            tau *= 0.5;
        }
        let Some((next, e)) = accepted else {
            // No step size decreases J any more.
            return Ok((state, it, true));
        };
        let change = (energy - e) / energy.abs();
        state = next;
        energy = e;
        tau = (2.0 * tau).min(1.0);
        small_steps = if change < opts.tol_energy { small_steps + 1 } else { 0 };
        if small_steps >= 2 {
            return Ok((state, it + 1, true));
        }
    }
    Ok((state, opts.max_iters, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SymmetryConfig;
    use crate::scalar::{least_energy_on_interval, SolverOptions};

    #[test]
    fn single_component_is_scalar_problem() {
        let g = OrbitGrid::build(SymmetryConfig::new(2, 2).unwrap(), 128, 1.0).unwrap();
        let coupling = CouplingMatrix::new(vec![vec![0.0]], vec![vec![3.0]], vec![vec![3.0]], 6.0).unwrap();
        let init = SystemState::new(vec![ReducedFunction::from_fn(g.clone(), |t| 1.0 + 0.3 * t.cos())], coupling.clone())
            .unwrap();
        let sol = minimize_system(&g, &coupling, &init, &SystemOptions::default()).unwrap();
        let scalar = least_energy_on_interval(&g, 0.0, PI, &SolverOptions::default()).unwrap();
        assert!((sol.report.c_value - scalar.energy).abs() < 1e-7 * scalar.energy);
    }

    #[test]
    fn initial_state_is_disjoint() {
        let g = OrbitGrid::build(SymmetryConfig::new(2, 2).unwrap(), 64, 1.0).unwrap();
        let c = CouplingMatrix::uniform(3, -1.0, 6.0).unwrap();
        let s = initial_state(&g, &c).unwrap();
        let r = system_energy(&s);
        assert_eq!(r.max_overlap(), 0.0);
        assert!(r.nehari_defects.iter().all(|d| *d < 1e-12));
    }
}
