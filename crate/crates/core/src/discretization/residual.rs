use std::f64::consts::PI;

use crate::error::{Error, Result};

use super::integrals::{apply_energy_operator, signed_pow};
use super::ReducedFunction;

/// Pointwise residual of the reduced Yamabe equation
///
/// `-(h w')'/h + (a_N/4) w - (1/4) |w|^{2*-2} w`
///
/// at the nodes strictly inside `(a, b)`; other nodes get zero. The
/// derivative term is the flux difference of the stiffness operator divided
/// by the node's mass, so a solution of the discrete equation has residual at
/// the level of the solver tolerance away from the ends of its interval.
pub fn reduced_residual(w: &ReducedFunction, interval: (f64, f64)) -> Result<ReducedFunction> {
    let (a, b) = interval;
    if !(a >= 0.0 && b <= PI && a < b) {
        return Err(Error::Domain(format!(
            "residual interval ({a}, {b}) is not inside [0, pi]"
        )));
    }
    let grid = w.grid();
    let p = grid.cfg().p_crit();
    let t = grid.nodes();
    let v = w.values();
    let mut op = vec![0.0; t.len()];
    apply_energy_operator(grid, v, &mut op);
    let out = (0..t.len())
        .map(|j| {
            let mass = grid.measure_weights()[j];
            if t[j] > a && t[j] < b && mass > 0.0 {
                op[j] / mass - 0.25 * signed_pow(v[j], p)
            } else {
                0.0
            }
        })
        .collect();
    Ok(ReducedFunction::from_raw(grid.clone(), out))
}

/// Largest `|r(t_j)|` over nodes at distance at least `margin` (in units of
/// the grid's largest cell) from every point of `cuts`.
pub fn residual_sup_away_from(r: &ReducedFunction, cuts: &[f64], margin: f64) -> f64 {
    let dist = margin * r.grid().max_spacing() - 1e-12;
    r.grid()
        .nodes()
        .iter()
        .zip(r.values())
        .filter(|(t, _)| cuts.iter().all(|c| (**t - c).abs() >= dist))
        .fold(0.0, |m, (_, v)| m.max(v.abs()))
}

/// Largest `|r(t_j)|` over nodes closer than `margin` cells to some cut.
pub fn residual_sup_near(r: &ReducedFunction, cuts: &[f64], margin: f64) -> f64 {
    let dist = margin * r.grid().max_spacing() - 1e-12;
    r.grid()
        .nodes()
        .iter()
        .zip(r.values())
        .filter(|(t, _)| cuts.iter().any(|c| (**t - c).abs() < dist))
        .fold(0.0, |m, (_, v)| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::OrbitGrid;
    use crate::geometry::SymmetryConfig;

    #[test]
    fn zero_has_zero_residual() {
        let g = OrbitGrid::build(SymmetryConfig::new(2, 2).unwrap(), 64, 1.0).unwrap();
        let r = reduced_residual(&ReducedFunction::zeros(g), (0.5, 2.0)).unwrap();
        assert!(r.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn constant_solution_is_exact() {
        for (m, n) in [(2, 2), (2, 3), (3, 3), (2, 4)] {
            let cfg = SymmetryConfig::new(m, n).unwrap();
            let g = OrbitGrid::build(cfg, 128, 1.0).unwrap();
            let c = cfg.constant_solution();
            let r = reduced_residual(&ReducedFunction::from_fn(g, |_| c), (0.0, PI)).unwrap();
            assert!(r.sup_norm() < 1e-10, "({m},{n}): {}", r.sup_norm());
        }
    }

    #[test]
    fn rejects_bad_interval() {
        let g = OrbitGrid::build(SymmetryConfig::new(2, 2).unwrap(), 64, 1.0).unwrap();
        let w = ReducedFunction::zeros(g);
        assert!(reduced_residual(&w, (-0.1, 1.0)).is_err());
        assert!(reduced_residual(&w, (1.0, 4.0)).is_err());
    }

    /// Symbolic oracle for `w(t) = cos(t) + 2` on (2,3): differentiating by
    /// hand gives `w' = -sin t`, `w'' = -cos t`.
    fn symbolic(cfg: &SymmetryConfig, t: f64) -> f64 {
        let w = t.cos() + 2.0;
        let (d1, d2) = (-t.sin(), -t.cos());
        -d2 - cfg.weight_log_derivative(t) * d1 + cfg.a_n() / 4.0 * w - 0.25 * w.powf(cfg.p_crit() - 1.0)
    }

    #[test]
    fn smooth_function_second_order() {
        let cfg = SymmetryConfig::new(2, 3).unwrap();
        let mut errs = Vec::new();
        for k in [128, 256] {
            let g = OrbitGrid::build(cfg, k, 1.0).unwrap();
            let w = ReducedFunction::from_fn(g.clone(), |t| t.cos() + 2.0);
            let r = reduced_residual(&w, (0.0, PI)).unwrap();
            let err = g
                .nodes()
                .iter()
                .zip(r.values())
                .filter(|(t, _)| **t > 0.5 && **t < PI - 0.5)
                .map(|(t, v)| (v - symbolic(&cfg, *t)).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.5, "ratio {ratio}, errors {errs:?}");
    }

    /// Non-conservative centred stencil `-w'' - (h'/h) w'` on uniform nodes.
    fn centred(cfg: &SymmetryConfig, t: &[f64], v: &[f64], j: usize) -> f64 {
        let d = t[j + 1] - t[j];
        let d1 = (v[j + 1] - v[j - 1]) / (2.0 * d);
        let d2 = (v[j + 1] - 2.0 * v[j] + v[j - 1]) / (d * d);
        -d2 - cfg.weight_log_derivative(t[j]) * d1 + cfg.a_n() / 4.0 * v[j] - 0.25 * signed_pow(v[j], cfg.p_crit())
    }

    #[test]
    fn agrees_with_centred_stencil_to_second_order() {
        let cfg = SymmetryConfig::new(3, 2).unwrap();
        let mut gaps = Vec::new();
        for k in [128, 256, 512] {
            let g = OrbitGrid::build(cfg, k, 1.0).unwrap();
            let w = ReducedFunction::from_fn(g.clone(), |t| (1.5 * t).sin() + 1.0);
            let r = reduced_residual(&w, (0.0, PI)).unwrap();
            let t = g.nodes();
            let gap = (1..t.len() - 1)
                .filter(|&j| t[j] > 0.3 && t[j] < PI - 0.3)
                .map(|j| (r.values()[j] - centred(&cfg, t, w.values(), j)).abs())
                .fold(0.0, f64::max);
            gaps.push(gap);
        }
        assert!(gaps[0] / gaps[1] > 3.5 && gaps[1] / gaps[2] > 3.5, "{gaps:?}");
    }

    #[test]
    fn restricted_to_open_interval() {
        let cfg = SymmetryConfig::new(2, 2).unwrap();
        let g = OrbitGrid::build(cfg, 256, 1.0).unwrap();
        let w = ReducedFunction::from_fn(g.clone(), |t| 1.0 + 0.1 * t * t);
        let (a, b) = (1.0003, 2.0003);
        let r = reduced_residual(&w, (a, b)).unwrap();
        for (t, v) in g.nodes().iter().zip(r.values()) {
            if !(*t > a && *t < b) {
                assert_eq!(*v, 0.0);
            } else {
                assert!(*v != 0.0);
            }
        }
    }
}
