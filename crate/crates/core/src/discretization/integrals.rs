use crate::error::{Error, Result};

use super::{OrbitGrid, ReducedFunction};

/// `|x|^e`, with an integer fast path.
#[inline]
pub(crate) fn pow_abs(x: f64, e: f64) -> f64 {
    let ax = x.abs();
    if e == 2.0 {
        ax * ax
    } else if e == 3.0 {
        ax * ax * ax
    } else if e == 4.0 {
        let s = ax * ax;
        s * s
    } else if e == 1.0 {
        ax
    } else if e == 0.0 {
        1.0
    } else if ax == 0.0 {
        0.0
    } else {
        ax.powf(e)
    }
}

/// `|x|^{e-1} sign(x)`, the derivative of `|x|^e / e`.
#[inline]
pub(crate) fn signed_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        pow_abs(x, e - 1.0).copysign(x)
    }
}

/// Dirichlet part `int |w'|^2 h dt` of the energy norm on raw node values.
pub(crate) fn gradient_energy(grid: &OrbitGrid, values: &[f64]) -> f64 {
    values
        .windows(2)
        .enumerate()
        .map(|(c, w)| {
            let d = w[1] - w[0];
            grid.cell_stiffness(c) * d * d
        })
        .sum()
}

pub(crate) fn normsq_raw(grid: &OrbitGrid, values: &[f64]) -> f64 {
    let a4 = grid.cfg().a_n() / 4.0;
    let mass: f64 = grid
        .measure_weights()
        .iter()
        .zip(values)
        .map(|(m, v)| m * v * v)
        .sum();
    gradient_energy(grid, values) + a4 * mass
}

pub(crate) fn crit_raw(grid: &OrbitGrid, values: &[f64], p: f64) -> f64 {
    0.25 * grid
        .measure_weights()
        .iter()
        .zip(values)
        .map(|(m, v)| m * pow_abs(*v, p))
        .sum::<f64>()
}

pub(crate) fn overlap_raw(grid: &OrbitGrid, wi: &[f64], wj: &[f64], alpha: f64, beta: f64) -> f64 {
    0.25 * grid
        .measure_weights()
        .iter()
        .zip(wi.iter().zip(wj))
        .map(|(m, (a, b))| {
            if *a == 0.0 || *b == 0.0 {
                0.0
            } else {
                m * pow_abs(*b, alpha) * pow_abs(*a, beta)
            }
        })
        .sum::<f64>()
}

/// `out = A w` where `w^T A w` is the squared energy norm.
pub(crate) fn apply_energy_operator(grid: &OrbitGrid, values: &[f64], out: &mut [f64]) {
    let a4 = grid.cfg().a_n() / 4.0;
    for (o, (m, v)) in out.iter_mut().zip(grid.measure_weights().iter().zip(values)) {
        *o = a4 * m * v;
    }
    for c in 0..values.len() - 1 {
        let flux = grid.cell_stiffness(c) * (values[c + 1] - values[c]);
        out[c] -= flux;
        out[c + 1] += flux;
    }
}

/// Squared energy norm `int (|w'|^2 + (a_N/4) w^2) h dt`, equal to the
/// sphere norm `int |grad u|^2 + a_N u^2` of `u = w o q`.
pub fn weighted_h1_normsq(w: &ReducedFunction) -> f64 {
    normsq_raw(w.grid(), w.values())
}

/// `(1/4) int |w|^p h dt`, which is `int_{S^N} |u|^p` for `u = w o q`.
pub fn weighted_crit_integral(w: &ReducedFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!("exponent p = {p} must be >= 1")));
    }
    Ok(crit_raw(w.grid(), w.values(), p))
}

/// Coupling integral `(1/4) int |w_j|^alpha |w_i|^beta h dt`.
pub fn weighted_overlap(
    wi: &ReducedFunction,
    wj: &ReducedFunction,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    wi.check_same_grid(wj)?;
    check_exponents(alpha, beta, wi.grid().cfg().p_crit())?;
    Ok(overlap_raw(wi.grid(), wi.values(), wj.values(), alpha, beta))
}

pub(crate) fn check_exponents(alpha: f64, beta: f64, p_crit: f64) -> Result<()> {
    if !(alpha > 1.0 && beta > 1.0) {
        return Err(Error::Config(format!(
            "coupling exponents must exceed 1, got alpha = {alpha}, beta = {beta}"
        )));
    }
    if (alpha + beta - p_crit).abs() > 1e-12 * p_crit {
        return Err(Error::Config(format!(
            "alpha + beta = {} differs from the critical exponent {p_crit}",
            alpha + beta
        )));
    }
    Ok(())
}

/// Discrete inner product of `L^2(S^N)` restricted to invariant functions.
pub fn l2_inner(u: &ReducedFunction, v: &ReducedFunction) -> Result<f64> {
    u.check_same_grid(v)?;
    Ok(0.25
        * u.grid()
            .measure_weights()
            .iter()
            .zip(u.values().iter().zip(v.values()))
            .map(|(m, (a, b))| m * a * b)
            .sum::<f64>())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::SymmetryConfig;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid22(k: usize) -> std::sync::Arc<OrbitGrid> {
        OrbitGrid::build(SymmetryConfig::new(2, 2).unwrap(), k, 1.0).unwrap()
    }

    /// Composite Simpson rule on a fine uniform grid, independent of the
    /// product weights used by the discretization.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for j in 1..n {
            s += if j % 2 == 1 { 4.0 } else { 2.0 } * f(a + j as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn zero_function() {
        let w = ReducedFunction::zeros(grid22(64));
        assert_eq!(weighted_h1_normsq(&w), 0.0);
        assert_eq!(weighted_crit_integral(&w, 6.0).unwrap(), 0.0);
        assert_eq!(weighted_crit_integral(&w, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn constant_one() {
        let w = ReducedFunction::from_fn(grid22(64), |_| 1.0);
        assert_relative_eq!(weighted_h1_normsq(&w), 1.5 * PI * PI, max_relative = 1e-13);
        assert_relative_eq!(
            weighted_crit_integral(&w, 6.0).unwrap(),
            2.0 * PI * PI,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            weighted_overlap(&w, &w, 3.0, 3.0).unwrap(),
            2.0 * PI * PI,
            max_relative = 1e-13
        );
    }

    #[test]
    fn sine_against_fine_quadrature() {
        let cfg = SymmetryConfig::new(2, 2).unwrap();
        let w = ReducedFunction::from_fn(grid22(512), f64::sin);
        let oracle_norm = simpson(
            |t| (t.cos().powi(2) + 0.75 / 4.0 * t.sin().powi(2)) * cfg.weight(t),
            0.0,
            PI,
            1_000_000,
        );
        let got = weighted_h1_normsq(&w);
        // Second-order scheme at 512 cells.
        assert!((got - oracle_norm).abs() / oracle_norm < 2e-5, "{got} vs {oracle_norm}");
        assert_relative_eq!(
            weighted_crit_integral(&w, 2.0).unwrap(),
            PI * PI * 4.0 / 3.0,
            max_relative = 2e-5
        );
    }

    #[test]
    fn sine_normsq_converges_at_second_order() {
        let cfg = SymmetryConfig::new(2, 2).unwrap();
        let oracle = simpson(
            |t| (t.cos().powi(2) + 0.75 / 4.0 * t.sin().powi(2)) * cfg.weight(t),
            0.0,
            PI,
            1_000_000,
        );
        let e1 = (weighted_h1_normsq(&ReducedFunction::from_fn(grid22(256), f64::sin)) - oracle).abs();
        let e2 = (weighted_h1_normsq(&ReducedFunction::from_fn(grid22(512), f64::sin)) - oracle).abs();
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
        // Extrapolated value matches the oracle to 1e-6.
        let richardson = weighted_h1_normsq(&ReducedFunction::from_fn(grid22(512), f64::sin)) * 4.0 / 3.0
            - weighted_h1_normsq(&ReducedFunction::from_fn(grid22(256), f64::sin)) / 3.0;
        assert!((richardson - oracle).abs() < 1e-6);
    }

    #[test]
    fn disjoint_overlap_is_zero() {
        let g = grid22(64);
        let a = ReducedFunction::bump(g.clone(), 0.0, 1.0);
        let b = ReducedFunction::bump(g, 1.0, PI);
        assert_eq!(weighted_overlap(&a, &b, 3.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn overlap_exponent_checks() {
        let w = ReducedFunction::from_fn(grid22(64), |_| 1.0);
        assert!(matches!(weighted_overlap(&w, &w, 1.0, 5.0), Err(Error::Config(_))));
        assert!(matches!(weighted_overlap(&w, &w, 2.0, 2.0), Err(Error::Config(_))));
        let other = ReducedFunction::from_fn(grid22(128), |_| 1.0);
        assert!(matches!(weighted_overlap(&w, &other, 3.0, 3.0), Err(Error::GridMismatch)));
        assert!(weighted_crit_integral(&w, 0.5).is_err());
    }

    #[test]
    fn operator_matches_norm() {
        let g = grid22(64);
        let w = ReducedFunction::from_fn(g.clone(), |t| (3.0 * t).cos() + t);
        let mut aw = vec![0.0; g.len()];
        apply_energy_operator(&g, w.values(), &mut aw);
        let quad: f64 = aw.iter().zip(w.values()).map(|(a, b)| a * b).sum();
        assert_relative_eq!(quad, weighted_h1_normsq(&w), max_relative = 1e-13);
    }

    #[test]
    fn isometry_for_constants() {
        for (m, n) in [(2, 2), (2, 3), (3, 3), (2, 4)] {
            let cfg = SymmetryConfig::new(m, n).unwrap();
            let g = OrbitGrid::build(cfg, 128, 1.0).unwrap();
            let c = 1.7;
            let w = ReducedFunction::from_fn(g, |_| c);
            let sphere_side = cfg.a_n() * c * c * cfg.sphere_volume();
            assert_relative_eq!(weighted_h1_normsq(&w), sphere_side, max_relative = 1e-10);
        }
    }

    proptest! {
        #[test]
        fn crit_integral_homogeneous(s in 0.1f64..10.0, p in 1.0f64..8.0) {
            let g = grid22(64);
            let w = ReducedFunction::from_fn(g, |t| (t * 1.3).sin() + 0.2);
            let base = weighted_crit_integral(&w, p).unwrap();
            let scaled = weighted_crit_integral(&w.scaled(s), p).unwrap();
            prop_assert!((scaled - s.powf(p) * base).abs() <= 1e-12 * scaled.abs().max(1.0));
        }

        #[test]
        fn overlap_diagonal_is_crit(c in 0.1f64..3.0) {
            let g = grid22(64);
            let w = ReducedFunction::from_fn(g, |t| c * (1.0 + t.cos() * 0.5));
            let o = weighted_overlap(&w, &w, 3.0, 3.0).unwrap();
            let ci = weighted_crit_integral(&w, 6.0).unwrap();
            prop_assert!((o - ci).abs() <= 1e-12 * ci);
        }
    }
}
