//! The competitive system
//!
//! `-w_i'' - (h'/h) w_i' + (a_N/4) w_i = (1/4)|w_i|^{p-2} w_i
//!     + (1/4) sum_{j != i} lambda_ij beta_ij |w_j|^alpha_ij |w_i|^{beta_ij - 2} w_i`
//!
//! in orbit coordinates, with its energy, Nehari projection, minimization and
//! the continuation `lambda -> -infinity` under which the components segregate.

mod continuation;
mod minimize;
mod nehari;
mod supports;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discretization::{
    apply_energy_operator, check_exponents, crit_raw, normsq_raw, overlap_raw, pow_abs, signed_pow,
    OrbitGrid, ReducedFunction,
};
use crate::error::{Error, Result};

pub use continuation::{lambda_continuation, ContinuationResult, StageFailure, StageReport, StageResult};
pub use minimize::{initial_state, minimize_system, SystemOptions, SystemSolution};
pub use nehari::{nehari_scales, project_to_system_nehari};
pub use supports::{extract_supports, ordered_supports, Support};

/// Coupling strengths and exponents of the system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    lambda: Vec<Vec<f64>>,
    alpha: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
}

impl CouplingMatrix {
    /// Validates `lambda_ij = lambda_ji < 0`, `alpha_ij = beta_ji`,
    /// `alpha_ij + beta_ij = p_crit` and `alpha_ij, beta_ij > 1` off the diagonal.
    pub fn new(lambda: Vec<Vec<f64>>, alpha: Vec<Vec<f64>>, beta: Vec<Vec<f64>>, p_crit: f64) -> Result<Self> {
        let m = lambda.len();
        let square = |x: &Vec<Vec<f64>>| x.len() == m && x.iter().all(|r| r.len() == m);
        if m == 0 || !square(&lambda) || !square(&alpha) || !square(&beta) {
            return Err(Error::Config("coupling matrices must be square of one common size".into()));
        }
        let mut problems = Vec::new();
        for i in 0..m {
            if lambda[i][i] != 0.0 {
                problems.push(format!("lambda[{i}][{i}] must be 0"));
            }
            for j in 0..m {
                if i == j {
                    continue;
                }
                if !(lambda[i][j] < 0.0) {
                    problems.push(format!("lambda[{i}][{j}] = {} must be negative", lambda[i][j]));
                }
                if lambda[i][j] != lambda[j][i] {
                    problems.push(format!("lambda not symmetric at ({i}, {j})"));
                }
                if alpha[i][j] != beta[j][i] {
                    problems.push(format!("alpha[{i}][{j}] != beta[{j}][{i}]"));
                }
                if let Err(e) = check_exponents(alpha[i][j], beta[i][j], p_crit) {
                    problems.push(format!("({i}, {j}): {e}"));
                }
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        Ok(Self { lambda, alpha, beta })
    }

    /// `lambda_ij = lambda` for all `i != j`, `alpha = beta = p_crit / 2`.
    pub fn uniform(components: usize, lambda: f64, p_crit: f64) -> Result<Self> {
        let half = 0.5 * p_crit;
        let full = |v: f64| vec![vec![v; components]; components];
        let mut lam = full(lambda);
        for (i, row) in lam.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        Self::new(lam, full(half), full(half), p_crit)
    }

    /// The same exponents with every off-diagonal strength set to `lambda`.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let m = self.components();
        if m == 1 {
            return Ok(self.clone());
        }
        let lam = (0..m)
            .map(|i| (0..m).map(|j| if i == j { 0.0 } else { lambda }).collect())
            .collect();
        let p = self.alpha[0][1] + self.beta[0][1];
        Self::new(lam, self.alpha.clone(), self.beta.clone(), p)
    }

    pub fn components(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self, i: usize, j: usize) -> f64 {
        self.lambda[i][j]
    }

    pub fn alpha(&self, i: usize, j: usize) -> f64 {
        self.alpha[i][j]
    }

    pub fn beta(&self, i: usize, j: usize) -> f64 {
        self.beta[i][j]
    }

    /// Largest `|lambda_ij|`.
    pub fn strength(&self) -> f64 {
        self.lambda.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `M` profiles on one grid together with their coupling.
#[derive(Debug, Clone)]
pub struct SystemState {
    components: Vec<ReducedFunction>,
    coupling: CouplingMatrix,
}

impl SystemState {
    pub fn new(components: Vec<ReducedFunction>, coupling: CouplingMatrix) -> Result<Self> {
        if components.len() != coupling.components() {
            return Err(Error::Config(format!(
                "{} components for a {}x{} coupling matrix",
                components.len(),
                coupling.components(),
                coupling.components()
            )));
        }
        for c in &components[1..] {
            components[0].check_same_grid(c)?;
        }
        Ok(Self { components, coupling })
    }

    pub fn components(&self) -> &[ReducedFunction] {
        &self.components
    }

    pub fn coupling(&self) -> &CouplingMatrix {
        &self.coupling
    }

    pub fn grid(&self) -> &Arc<OrbitGrid> {
        self.components[0].grid()
    }

    pub fn with_coupling(&self, coupling: CouplingMatrix) -> Result<Self> {
        Self::new(self.components.clone(), coupling)
    }

    pub fn into_components(self) -> Vec<ReducedFunction> {
        self.components
    }

    /// Every component has squared norm at least `floor` (and is nonzero).
    pub fn is_fully_nontrivial(&self, floor: f64) -> bool {
        self.components
            .iter()
            .all(|c| !c.is_zero() && normsq_raw(c.grid(), c.values()) >= floor)
    }
}

/// Energy terms of a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub per_component_normsq: Vec<f64>,
    pub per_component_crit: Vec<f64>,
    /// `overlaps[i][j] = (1/4) int |w_j|^alpha_ij |w_i|^beta_ij h dt`; zero diagonal.
    pub overlaps: Vec<Vec<f64>>,
    pub total_j: f64,
    /// `(1/N) sum_i normsq_i`, the energy on the Nehari set.
    pub c_value: f64,
    /// Relative defect of each Nehari identity `dJ_i[w_i] = 0`.
    pub nehari_defects: Vec<f64>,
}

impl EnergyReport {
    pub fn max_overlap(&self) -> f64 {
        self.overlaps.iter().flatten().fold(0.0, |m, v| m.max(*v))
    }

    pub fn max_crit(&self) -> f64 {
        self.per_component_crit.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// Overlap matrix with zero diagonal.
pub(crate) fn overlap_matrix(state: &SystemState) -> Vec<Vec<f64>> {
    let k = state.coupling.components();
    let grid = state.grid();
    let mut o = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i != j {
                let c = &state.coupling;
                o[i][j] = overlap_raw(
                    grid,
                    state.components[i].values(),
                    state.components[j].values(),
                    c.alpha[i][j],
                    c.beta[i][j],
                );
            }
        }
    }
    o
}

/// `J = (1/2) sum |w_i|^2 - (1/p) sum crit_i - (1/2) sum_{i != j} lambda_ij O_ij`.
pub fn system_energy(state: &SystemState) -> EnergyReport {
    let grid = state.grid();
    let cfg = grid.cfg();
    let p = cfg.p_crit();
    let c = &state.coupling;
    let k = c.components();
    let normsq: Vec<f64> = state.components.iter().map(|w| normsq_raw(grid, w.values())).collect();
    let crit: Vec<f64> = state.components.iter().map(|w| crit_raw(grid, w.values(), p)).collect();
    let overlaps = overlap_matrix(state);
    let mut total = 0.5 * normsq.iter().sum::<f64>() - crit.iter().sum::<f64>() / p;
    let mut defects = Vec::with_capacity(k);
    for i in 0..k {
        let mut coupling_i = 0.0;
        for j in 0..k {
            if i != j {
                total -= 0.5 * c.lambda[i][j] * overlaps[i][j];
                coupling_i += c.lambda[i][j] * c.beta[i][j] * overlaps[i][j];
            }
        }
        // dJ_i[w_i] = |w_i|^2 - crit_i - sum_j lambda_ij beta_ij O_ij.
        let d = normsq[i] - crit[i] - coupling_i;
        defects.push(if normsq[i] > 0.0 { d.abs() / normsq[i] } else { 0.0 });
    }
    let c_value = normsq.iter().sum::<f64>() / cfg.dim() as f64;
    EnergyReport {
        per_component_normsq: normsq,
        per_component_crit: crit,
        overlaps,
        total_j: total,
        c_value,
        nehari_defects: defects,
    }
}

/// Coupling potential `(1/4) sum_j (-lambda_ij) beta_ij |w_j|^alpha |w_i|^{beta-2}`
/// of component `i` at each node. For `beta < 2` the factor `|w_i|^{beta-2}`
/// is evaluated with `|w_i|` floored at `1e-12` times its sup norm.
pub(crate) fn coupling_potential(state: &SystemState, i: usize) -> Vec<f64> {
    let c = &state.coupling;
    let wi = state.components[i].values();
    let floor = 1e-12 * state.components[i].sup_norm();
    let mut pot = vec![0.0; wi.len()];
    for (j, wj) in state.components.iter().enumerate() {
        if j == i {
            continue;
        }
        let (a, b, l) = (c.alpha[i][j], c.beta[i][j], c.lambda[i][j]);
        for ((pk, vi), vj) in pot.iter_mut().zip(wi).zip(wj.values()) {
            if *vj != 0.0 {
                let base = if b < 2.0 { vi.abs().max(floor) } else { vi.abs() };
                *pk += 0.25 * (-l) * b * pow_abs(*vj, a) * pow_abs(base, b - 2.0);
            }
        }
    }
    pot
}

/// Euclidean gradient of the discrete `J` with respect to the nodal values of
/// component `i`.
pub(crate) fn euclidean_gradient(state: &SystemState, i: usize) -> Vec<f64> {
    let grid = state.grid();
    let p = grid.cfg().p_crit();
    let c = &state.coupling;
    let wi = state.components[i].values();
    let mass = grid.measure_weights();
    let mut g = vec![0.0; wi.len()];
    apply_energy_operator(grid, wi, &mut g);
    for (k, gk) in g.iter_mut().enumerate() {
        let mut rhs = signed_pow(wi[k], p);
        for (j, wj) in state.components.iter().enumerate() {
            if j != i && wj.values()[k] != 0.0 {
                let (a, b) = (c.alpha[i][j], c.beta[i][j]);
                rhs += c.lambda[i][j] * b * pow_abs(wj.values()[k], a) * signed_pow(wi[k], b);
            }
        }
        *gk -= 0.25 * mass[k] * rhs;
    }
    g
}

/// `L^2(h)`-gradient of `J` per component, for the inner product
/// `(1/4) int u v h dt` of [`crate::discretization::l2_inner`].
pub fn system_gradient(state: &SystemState) -> Vec<ReducedFunction> {
    let grid = state.grid();
    let mass = grid.measure_weights();
    (0..state.coupling.components())
        .map(|i| {
            let g = euclidean_gradient(state, i)
                .iter()
                .zip(mass)
                .map(|(g, m)| 4.0 * g / m)
                .collect();
            ReducedFunction::from_raw(grid.clone(), g)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::discretization::l2_inner;
    use crate::geometry::SymmetryConfig;
    use approx::assert_relative_eq;

    fn grid(k: usize) -> Arc<OrbitGrid> {
        OrbitGrid::build(SymmetryConfig::new(2, 2).unwrap(), k, 1.0).unwrap()
    }

    #[test]
    fn coupling_validation() {
        assert!(CouplingMatrix::uniform(2, -1.0, 6.0).is_ok());
        assert!(CouplingMatrix::uniform(2, 1.0, 6.0).is_err());
        assert!(CouplingMatrix::uniform(3, -1.0, 5.0).is_ok());
        let lam = vec![vec![0.0, -1.0], vec![-2.0, 0.0]];
        let e = vec![vec![3.0; 2]; 2];
        assert!(CouplingMatrix::new(lam, e.clone(), e.clone(), 6.0).is_err());
        let lam = vec![vec![0.0, -1.0], vec![-1.0, 0.0]];
        let a = vec![vec![0.0, 2.0], vec![4.0, 0.0]];
        let b = vec![vec![0.0, 4.0], vec![2.0, 0.0]];
        assert!(CouplingMatrix::new(lam.clone(), a.clone(), b.clone(), 6.0).is_ok());
        assert!(CouplingMatrix::new(lam, a.clone(), a, 6.0).is_err());
    }

    #[test]
    fn zero_state() {
        let g = grid(64);
        let s = SystemState::new(
            vec![ReducedFunction::zeros(g.clone()), ReducedFunction::zeros(g)],
            CouplingMatrix::uniform(2, -1.0, 6.0).unwrap(),
        )
        .unwrap();
        assert_eq!(system_energy(&s).total_j, 0.0);
        assert!(system_gradient(&s).iter().all(|g| g.is_zero()));
    }

    #[test]
    fn constant_pair() {
        let g = grid(128);
        let one = ReducedFunction::from_fn(g, |_| 1.0);
        let s = SystemState::new(vec![one.clone(), one], CouplingMatrix::uniform(2, -1.0, 6.0).unwrap()).unwrap();
        let r = system_energy(&s);
        let pi2 = PI * PI;
        let expected = 2.0 * (0.5 * 1.5 * pi2 - 2.0 * pi2 / 6.0) + 2.0 * pi2;
        assert_relative_eq!(r.total_j, expected, max_relative = 1e-12);
    }

    #[test]
    fn disjoint_supports_decouple() {
        let g = grid(128);
        let a = ReducedFunction::bump(g.clone(), 0.0, 1.5);
        let b = ReducedFunction::bump(g, 1.5, PI);
        let s = SystemState::new(vec![a, b], CouplingMatrix::uniform(2, -50.0, 6.0).unwrap()).unwrap();
        let r = system_energy(&s);
        assert_eq!(r.max_overlap(), 0.0);
        let single: f64 = (0..2)
            .map(|i| 0.5 * r.per_component_normsq[i] - r.per_component_crit[i] / 6.0)
            .sum();
        assert_relative_eq!(r.total_j, single, max_relative = 1e-14);
    }

    #[test]
    fn single_component_gradient_is_scalar_gradient() {
        let g = grid(64);
        let w = ReducedFunction::from_fn(g, |t| 1.0 + 0.3 * t.cos());
        let coupling = CouplingMatrix::new(vec![vec![0.0]], vec![vec![3.0]], vec![vec![3.0]], 6.0).unwrap();
        let s = SystemState::new(vec![w.clone()], coupling).unwrap();
        let gs = &system_gradient(&s)[0];
        let gw = crate::scalar::energy_gradient(&w);
        for (a, b) in gs.values().iter().zip(gw.values()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn gradient_pairs_with_l2_inner() {
        let g = grid(64);
        let a = ReducedFunction::from_fn(g.clone(), |t| 1.0 + 0.2 * t.sin());
        let b = ReducedFunction::from_fn(g.clone(), |t| 0.5 + 0.1 * t);
        let s = SystemState::new(vec![a, b], CouplingMatrix::uniform(2, -2.0, 6.0).unwrap()).unwrap();
        let dir = ReducedFunction::from_fn(g, |t| (2.0 * t).cos());
        let grad = system_gradient(&s);
        let eucl = euclidean_gradient(&s, 0);
        let lhs = l2_inner(&grad[0], &dir).unwrap();
        let rhs: f64 = eucl.iter().zip(dir.values()).map(|(x, y)| x * y).sum();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }
}
