use crate::discretization::{crit_raw, normsq_raw};
use crate::error::{Error, Result};
use crate::linalg::solve_dense;

use super::{overlap_matrix, SystemState};

const FIXED_POINT_ITERS: usize = 200;
const DAMPING: f64 = 0.5;
const NEWTON_ITERS: usize = 30;
const RESIDUAL_TOL: f64 = 1e-11;

/// Scales `s_i > 0` putting `(s_1 w_1, ..., s_M w_M)` on the Nehari set, i.e.
///
/// `s_i^{p-2} crit_i = |w_i|^2 + sum_j (-lambda_ij) beta_ij s_j^alpha_ij s_i^{beta_ij - 2} O_ij`.
///
/// Starts from the decoupled scales, runs a damped fixed-point iteration in
/// `log s` and finishes with Newton steps on the same equations.
pub fn nehari_scales(state: &SystemState) -> Result<Vec<f64>> {
    let grid = state.grid();
    let p = grid.cfg().p_crit();
    let c = state.coupling();
    let m = c.components();
    let normsq: Vec<f64> = state.components().iter().map(|w| normsq_raw(grid, w.values())).collect();
    let crit: Vec<f64> = state.components().iter().map(|w| crit_raw(grid, w.values(), p)).collect();
    if let Some(i) = (0..m).find(|&i| !(normsq[i] > 0.0 && crit[i] > 0.0)) {
        return Err(Error::Degenerate(format!("component {i} vanishes")));
    }
    let o = overlap_matrix(state);
    // Coupling weights k_ij = (-lambda_ij) beta_ij O_ij >= 0.
    let k: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i == j { 0.0 } else { -c.lambda(i, j) * c.beta(i, j) * o[i][j] })
                .collect()
        })
        .collect();
    let q = p - 2.0;
    // G_i(x) = |w_i|^2 + sum_j k_ij e^{alpha x_j + (beta - 2) x_i} - crit_i e^{q x_i}
    let residual = |x: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| {
                let coupling: f64 = (0..m)
                    .filter(|&j| j != i && k[i][j] > 0.0)
                    .map(|j| k[i][j] * (c.alpha(i, j) * x[j] + (c.beta(i, j) - 2.0) * x[i]).exp())
                    .sum();
                (normsq[i] + coupling - crit[i] * (q * x[i]).exp()) / (crit[i] * (q * x[i]).exp())
            })
            .collect()
    };
    let mut x: Vec<f64> = (0..m).map(|i| (normsq[i] / crit[i]).ln() / q).collect();
    for _ in 0..FIXED_POINT_ITERS {
        let target: Vec<f64> = (0..m)
            .map(|i| {
                let coupling: f64 = (0..m)
                    .filter(|&j| j != i && k[i][j] > 0.0)
                    .map(|j| k[i][j] * (c.alpha(i, j) * x[j] + (c.beta(i, j) - 2.0) * x[i]).exp())
                    .sum();
                ((normsq[i] + coupling) / crit[i]).ln() / q
            })
            .collect();
        if !target.iter().all(|v| v.is_finite()) {
            break;
        }
        let change = target.iter().zip(&x).fold(0.0f64, |mx, (t, s)| mx.max((t - s).abs()));
        for (xi, ti) in x.iter_mut().zip(&target) {
            *xi = (1.0 - DAMPING) * *xi + DAMPING * ti;
        }
        if change < 1e-14 {
            break;
        }
    }
    for _ in 0..NEWTON_ITERS {
        let r = residual(&x);
        if r.iter().all(|v| v.abs() < 1e-15) {
            break;
        }
        let e: Vec<f64> = (0..m).map(|i| crit[i] * (q * x[i]).exp()).collect();
        // Jacobian of the unnormalized G, rows scaled by 1/e_i like the residual.
        let jac: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        if i == j {
                            let diag: f64 = (0..m)
                                .filter(|&l| l != i && k[i][l] > 0.0)
                                .map(|l| {
                                    (c.beta(i, l) - 2.0)
                                        * k[i][l]
                                        * (c.alpha(i, l) * x[l] + (c.beta(i, l) - 2.0) * x[i]).exp()
                                })
                                .sum();
                            (diag - q * e[i]) / e[i]
                        } else if k[i][j] > 0.0 {
                            c.alpha(i, j) * k[i][j] * (c.alpha(i, j) * x[j] + (c.beta(i, j) - 2.0) * x[i]).exp()
                                / e[i]
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let Some(step) = solve_dense(jac, r.clone()) else {
            break;
        };
        let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a - b).collect();
        let rt = residual(&trial);
        let norm = |v: &[f64]| v.iter().fold(0.0f64, |mx, a| mx.max(a.abs()));
        if !(norm(&rt) < norm(&r)) {
            break;
        }
        x = trial;
    }
    let r = residual(&x);
    let worst = r.iter().fold(0.0f64, |mx, a| mx.max(a.abs()));
    if !(worst <= RESIDUAL_TOL) {
        return Err(Error::Projection(format!(
            "scale equations unsolved (relative residual {worst:.3e}); supports overlap too strongly for lambda = {:.3e}",
            -c.strength()
        )));
    }
    Ok(x.iter().map(|v| v.exp()).collect())
}

/// Rescales each component onto the Nehari set of the system.
pub fn project_to_system_nehari(state: &SystemState) -> Result<SystemState> {
    let s = nehari_scales(state)?;
    let comps = state
        .components()
        .iter()
        .zip(&s)
        .map(|(w, si)| w.scaled(*si))
        .collect();
    SystemState::new(comps, state.coupling().clone())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::discretization::{OrbitGrid, ReducedFunction};
    use crate::geometry::SymmetryConfig;
    use crate::scalar::nehari_scale;
    use crate::system::{system_energy, CouplingMatrix};

    fn grid() -> Arc<OrbitGrid> {
        OrbitGrid::build(SymmetryConfig::new(2, 2).unwrap(), 128, 1.0).unwrap()
    }

    #[test]
    fn disjoint_components_use_scalar_scales() {
        let g = grid();
        let a = ReducedFunction::bump(g.clone(), 0.0, 1.2);
        let b = ReducedFunction::bump(g, 1.2, PI);
        let s = SystemState::new(vec![a.clone(), b.clone()], CouplingMatrix::uniform(2, -10.0, 6.0).unwrap()).unwrap();
        let sc = nehari_scales(&s).unwrap();
        assert!((sc[0] - nehari_scale(&a).unwrap()).abs() < 1e-12);
        assert!((sc[1] - nehari_scale(&b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn projected_state_is_fixed() {
        let g = grid();
        let a = ReducedFunction::bump(g.clone(), 0.0, 2.0);
        let b = ReducedFunction::bump(g, 1.0, PI);
        let s = SystemState::new(vec![a, b], CouplingMatrix::uniform(2, -0.5, 6.0).unwrap()).unwrap();
        let p = project_to_system_nehari(&s).unwrap();
        let r = system_energy(&p);
        assert!(r.nehari_defects.iter().all(|d| *d < 1e-10));
        for s in nehari_scales(&p).unwrap() {
            assert!((s - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn strong_overlap_fails() {
        let g = grid();
        let a = ReducedFunction::from_fn(g.clone(), |_| 1.0);
        let s = SystemState::new(vec![a.clone(), a], CouplingMatrix::uniform(2, -10.0, 6.0).unwrap()).unwrap();
        assert!(matches!(nehari_scales(&s), Err(Error::Projection(_))));
    }
}
