//! Symmetry data and sphere geometry.
//!
//! The group `O(m) x O(n)` acts blockwise on `R^m x R^n`, and its orbit space
//! on the unit sphere `S^N` (with `N = m + n - 1`) is the closed interval
//! `[0, pi]`. Every invariant function is a profile `w(t)` on that interval,
//! and sphere integrals become integrals against the weight `h(t)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs this close to an endpoint of `[0, pi]` are snapped onto it.
pub const ENDPOINT_CLAMP: f64 = 1e-14;

/// The symmetry group `O(m) x O(n)` together with every constant derived from it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryConfig {
    m: usize,
    n: usize,
    dim: usize,
    a_n: f64,
    p_crit: f64,
    weight_const: f64,
}

impl SymmetryConfig {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        let mut problems = Vec::new();
        if m < 2 {
            problems.push("m >= 2 required".to_string());
        }
        if n < 2 {
            problems.push("n >= 2 required".to_string());
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("; ")));
        }
        let dim = m + n - 1;
        let nf = dim as f64;
        let weight_const = 2.0 * sphere_area(m)? * sphere_area(n)?;
        Ok(Self {
            m,
            n,
            dim,
            a_n: nf * (nf - 2.0) / 4.0,
            p_crit: 2.0 * nf / (nf - 2.0),
            weight_const,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sphere dimension `N = m + n - 1`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Linear coefficient `N(N-2)/4` of the conformal Laplacian.
    pub fn a_n(&self) -> f64 {
        self.a_n
    }

    /// Critical Sobolev exponent `2N/(N-2)`.
    pub fn p_crit(&self) -> f64 {
        self.p_crit
    }

    /// Prefactor `2 |S^{m-1}| |S^{n-1}|` of the orbit weight.
    pub fn weight_const(&self) -> f64 {
        self.weight_const
    }

    /// The configuration with the two factors exchanged; its weight is the
    /// mirror image `t -> pi - t` of this one.
    pub fn swapped(&self) -> Self {
        Self::new(self.n, self.m).expect("swapping keeps the configuration valid")
    }

    /// Surface measure `|S^N|` of the whole sphere.
    pub fn sphere_volume(&self) -> f64 {
        sphere_area(self.dim + 1).expect("dimension is at least 3")
    }

    /// The constant positive solution `a_N^{1/(2*-2)}` of the Yamabe equation.
    pub fn constant_solution(&self) -> f64 {
        self.a_n.powf(1.0 / (self.p_crit - 2.0))
    }

    /// Least energy `(1/N) |u|^{2*}_{2*}` of the constant solution.
    pub fn constant_solution_energy(&self) -> f64 {
        let c = self.constant_solution();
        c.powf(self.p_crit) * self.sphere_volume() / self.dim as f64
    }

    /// Orbit weight without domain checks; inputs are clamped to `[0, pi]`.
    pub fn weight(&self, t: f64) -> f64 {
        let t = clamp_angle(t);
        if t == 0.0 || t == PI {
            // Both exponents are positive since m, n >= 2.
            return 0.0;
        }
        let half = 0.5 * t;
        self.weight_const * half.cos().powi(self.m as i32 - 1) * half.sin().powi(self.n as i32 - 1)
    }

    /// Logarithmic derivative `h'/h` on the open interval `(0, pi)`.
    pub fn weight_log_derivative(&self, t: f64) -> f64 {
        let half = 0.5 * t;
        -0.5 * (self.m as f64 - 1.0) * half.tan() + 0.5 * (self.n as f64 - 1.0) / half.tan()
    }
}

fn clamp_angle(t: f64) -> f64 {
    if t.abs() <= ENDPOINT_CLAMP {
        0.0
    } else if (t - PI).abs() <= ENDPOINT_CLAMP {
        PI
    } else {
        t.clamp(0.0, PI)
    }
}

/// `Gamma(d/2)` by the half-integer recurrence.
fn gamma_half_integer(d: usize) -> f64 {
    // Gamma(1) = 1, Gamma(1/2) = sqrt(pi), Gamma(x + 1) = x Gamma(x).
    let (mut value, mut x) = if d % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = d as f64 / 2.0;
    while x < target {
        value *= x;
        x += 1.0;
    }
    value
}

/// Surface measure of the unit sphere `S^{d-1}` in `R^d`.
pub fn sphere_area(d: usize) -> Result<f64> {
    if d < 1 {
        return Err(Error::Domain(format!("sphere_area needs d >= 1, got {d}")));
    }
    Ok(2.0 * PI.powf(d as f64 / 2.0) / gamma_half_integer(d))
}

/// The orbit weight `h(t) = 2|S^{m-1}||S^{n-1}| cos^{m-1}(t/2) sin^{n-1}(t/2)`.
pub fn weight_h(t: f64, cfg: &SymmetryConfig) -> Result<f64> {
    if !(-ENDPOINT_CLAMP..=PI + ENDPOINT_CLAMP).contains(&t) {
        return Err(Error::Domain(format!("angle {t} outside [0, pi]")));
    }
    Ok(cfg.weight(t))
}

/// Orbit map `q(z1, z2) = arccos(|z1|^2 - |z2|^2)` written in terms of `|z1|^2`.
pub fn orbit_map(z1_norm_sq: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z1_norm_sq) {
        return Err(Error::Domain(format!(
            "|z1|^2 = {z1_norm_sq} is not in [0, 1]"
        )));
    }
    Ok((2.0 * z1_norm_sq - 1.0).clamp(-1.0, 1.0).acos())
}

/// Radii `(|z1|, |z2|)` of the product torus sitting over the orbit angle `a`.
pub fn boundary_radii(a: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && a < PI) {
        return Err(Error::DegenerateOrbit(a));
    }
    let half = 0.5 * a;
    Ok((half.cos(), half.sin()))
}

/// Conformal factor `(2/(1+|x|^2))^{(N-2)/2}` of the stereographic chart.
pub fn conformal_factor(x_norm: f64, cfg: &SymmetryConfig) -> Result<f64> {
    if x_norm < 0.0 || x_norm.is_nan() {
        return Err(Error::Domain(format!("|x| = {x_norm} must be >= 0")));
    }
    let exponent = (cfg.dim() as f64 - 2.0) / 2.0;
    Ok((2.0 / (1.0 + x_norm * x_norm)).powf(exponent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area(1).unwrap(), 2.0);
        assert_relative_eq!(sphere_area(2).unwrap(), 2.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(sphere_area(3).unwrap(), 4.0 * PI, epsilon = 1e-13);
        assert_relative_eq!(sphere_area(4).unwrap(), 2.0 * PI * PI, epsilon = 1e-13);
        assert!(matches!(sphere_area(0), Err(Error::Domain(_))));
    }

    #[test]
    fn derived_constants() {
        let cfg = SymmetryConfig::new(2, 2).unwrap();
        assert_eq!(cfg.dim(), 3);
        assert_relative_eq!(cfg.a_n(), 0.75);
        assert_relative_eq!(cfg.p_crit(), 6.0);
        assert_relative_eq!(cfg.weight_const(), 8.0 * PI * PI, epsilon = 1e-12);
        assert!(SymmetryConfig::new(1, 4).is_err());
        assert!(SymmetryConfig::new(3, 1).is_err());
    }

    #[test]
    fn weight_examples() {
        let cfg = SymmetryConfig::new(2, 2).unwrap();
        assert_relative_eq!(
            weight_h(PI / 2.0, &cfg).unwrap(),
            4.0 * PI * PI,
            epsilon = 1e-12
        );
        assert_eq!(weight_h(0.0, &cfg).unwrap(), 0.0);
        assert_eq!(weight_h(1e-15, &cfg).unwrap(), 0.0);
        let cfg32 = SymmetryConfig::new(3, 2).unwrap();
        assert_eq!(weight_h(PI, &cfg32).unwrap(), 0.0);
        assert!(weight_h(-0.1, &cfg).is_err());
        assert!(weight_h(3.2, &cfg).is_err());
    }

    #[test]
    fn orbit_map_examples() {
        assert_eq!(orbit_map(1.0).unwrap(), 0.0);
        assert_relative_eq!(orbit_map(0.5).unwrap(), PI / 2.0);
        assert_relative_eq!(orbit_map(0.0).unwrap(), PI);
        assert!(orbit_map(1.5).is_err());
        assert!(orbit_map(-0.1).is_err());
    }

    #[test]
    fn radii_examples() {
        let (r1, r2) = boundary_radii(PI / 2.0).unwrap();
        assert_relative_eq!(r1, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(r2, 0.5f64.sqrt(), epsilon = 1e-15);
        let (r1, r2) = boundary_radii(PI / 3.0).unwrap();
        assert_relative_eq!(r1, 3f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_relative_eq!(r2, 0.5, epsilon = 1e-15);
        let (r1, r2) = boundary_radii(1e-9).unwrap();
        assert_relative_eq!(r1, 1.0, epsilon = 1e-12);
        assert!(r2 < 1e-9);
        assert!(matches!(boundary_radii(0.0), Err(Error::DegenerateOrbit(_))));
        assert!(boundary_radii(PI).is_err());
    }

    #[test]
    fn conformal_factor_examples() {
        let n3 = SymmetryConfig::new(2, 2).unwrap();
        let n4 = SymmetryConfig::new(2, 3).unwrap();
        assert_relative_eq!(conformal_factor(0.0, &n3).unwrap(), 2f64.sqrt());
        assert_relative_eq!(conformal_factor(1.0, &n3).unwrap(), 1.0);
        assert_relative_eq!(conformal_factor(3f64.sqrt(), &n4).unwrap(), 0.5, epsilon = 1e-15);
        assert!(conformal_factor(-1.0, &n3).is_err());
    }

    #[test]
    fn constant_solution_energy_n3() {
        let cfg = SymmetryConfig::new(2, 2).unwrap();
        assert_relative_eq!(cfg.constant_solution(), 0.75f64.powf(0.25));
        assert_relative_eq!(
            cfg.constant_solution_energy(),
            PI * PI * 3f64.sqrt() / 4.0,
            epsilon = 1e-13
        );
    }

    #[test]
    fn log_derivative_matches_difference_quotient() {
        let cfg = SymmetryConfig::new(3, 4).unwrap();
        for &t in &[0.3, 1.0, 2.0, 2.9] {
            let d = 1e-6;
            let fd = (cfg.weight(t + d).ln() - cfg.weight(t - d).ln()) / (2.0 * d);
            assert_relative_eq!(cfg.weight_log_derivative(t), fd, max_relative = 1e-8);
        }
    }

    proptest! {
        #[test]
        fn swap_symmetry(m in 2usize..6, n in 2usize..6, t in 0.0..PI) {
            let cfg = SymmetryConfig::new(m, n).unwrap();
            let lhs = cfg.weight(PI - t);
            let rhs = cfg.swapped().weight(t);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * cfg.weight_const());
        }

        #[test]
        fn radii_on_unit_circle(a in 1e-6..(PI - 1e-6)) {
            let (r1, r2) = boundary_radii(a).unwrap();
            prop_assert!((r1 * r1 + r2 * r2 - 1.0).abs() <= 2.0 * f64::EPSILON);
        }

        #[test]
        fn orbit_map_inverts_radii(a in 1e-3..(PI - 1e-3)) {
            let (r1, _) = boundary_radii(a).unwrap();
            prop_assert!((orbit_map(r1 * r1).unwrap() - a).abs() <= 1e-12);
        }

        #[test]
        fn weight_positive_inside(m in 2usize..6, n in 2usize..6, t in 1e-3..(PI - 1e-3)) {
            let cfg = SymmetryConfig::new(m, n).unwrap();
            prop_assert!(cfg.weight(t) > 0.0);
        }
    }
}
