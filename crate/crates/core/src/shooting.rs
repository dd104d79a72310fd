//! Shooting integrator for the reduced Yamabe ODE, used as an oracle that
//! shares no code path with the variational solver.
//!
//! From an exceptional orbit the regular solution has `w'(0) = 0` and the
//! expansion `w = w0 + c t^2 + O(t^4)` with `c = G(w0) / (2n)`, where
//! `G(w) = (a_N/4) w - (1/4)|w|^{p-2} w` and `n - 1` is the exponent of the
//! weight at that end. The series supplies the state at the first node, and a
//! third-order Runge-Kutta scheme whose stages never touch the cell's right
//! end carries it across the grid.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::discretization::{
    signed_pow, weighted_crit_integral, weighted_h1_normsq, OrbitGrid, ReducedFunction,
};
use crate::error::{Error, Result};
use crate::geometry::SymmetryConfig;

/// Substeps per grid cell.
const SUBSTEPS: usize = 16;
/// Trajectories beyond this size count as blown up.
const BLOW_UP: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `w` at the grid nodes; zero past a blow-up.
    pub profile: ReducedFunction,
    /// `w'` at the grid nodes; zero past a blow-up.
    pub slope: Vec<f64>,
    /// Angle of the last node reached before the solution blew up.
    pub blow_up: Option<f64>,
    /// First zero of `w`, located by cubic Hermite interpolation.
    pub first_zero: Option<f64>,
}

/// Integrates the reduced ODE from `t = 0` (`from_left`) or `t = pi` with
/// `w = w0`, `w' = 0` there.
pub fn shoot_reduced_ode(grid: &Arc<OrbitGrid>, w0: f64, from_left: bool) -> Result<Trajectory> {
    if !(w0 >= 0.0 && w0.is_finite()) {
        return Err(Error::Domain(format!("initial value w0 = {w0} must be >= 0")));
    }
    if !(grid.starts_at_axis() && grid.ends_at_axis()) {
        return Err(Error::Domain("shooting needs a grid spanning [0, pi]".into()));
    }
    if from_left {
        return Ok(shoot_from_left(grid, w0));
    }
    // Mirror t -> pi - t, which swaps the two factors of the group.
    let cfg = grid.cfg().swapped();
    let nodes: Vec<f64> = grid.nodes().iter().rev().map(|t| PI - t).collect();
    let mirrored = Arc::new(OrbitGrid::from_nodes(cfg, nodes));
    let tr = shoot_from_left(&mirrored, w0);
    let mut values = tr.profile.into_values();
    values.reverse();
    let slope: Vec<f64> = tr.slope.iter().rev().map(|s| -s).collect();
    Ok(Trajectory {
        profile: ReducedFunction::from_raw(grid.clone(), values),
        slope,
        blow_up: tr.blow_up.map(|t| PI - t),
        first_zero: tr.first_zero.map(|t| PI - t),
    })
}

fn rhs(cfg: &SymmetryConfig, t: f64, w: f64, dw: f64) -> (f64, f64) {
    let p = cfg.p_crit();
    let g = 0.25 * cfg.a_n() * w - 0.25 * signed_pow(w, p);
    (dw, g - cfg.weight_log_derivative(t) * dw)
}

/// One step of Heun's third-order method (stages at `t`, `t + h/3`, `t + 2h/3`).
fn heun3(cfg: &SymmetryConfig, t: f64, y: (f64, f64), h: f64) -> (f64, f64) {
    let k1 = rhs(cfg, t, y.0, y.1);
    let k2 = rhs(cfg, t + h / 3.0, y.0 + h / 3.0 * k1.0, y.1 + h / 3.0 * k1.1);
    let k3 = rhs(cfg, t + 2.0 * h / 3.0, y.0 + 2.0 * h / 3.0 * k2.0, y.1 + 2.0 * h / 3.0 * k2.1);
    (y.0 + h / 4.0 * (k1.0 + 3.0 * k3.0), y.1 + h / 4.0 * (k1.1 + 3.0 * k3.1))
}

fn shoot_from_left(grid: &Arc<OrbitGrid>, w0: f64) -> Trajectory {
    let cfg = *grid.cfg();
    let t = grid.nodes();
    let mut values = vec![0.0; t.len()];
    let mut slope = vec![0.0; t.len()];
    values[0] = w0;
    let g0 = 0.25 * cfg.a_n() * w0 - 0.25 * signed_pow(w0, cfg.p_crit());
    let c = g0 / (2.0 * cfg.n() as f64);
    let mut y = (w0 + c * t[1] * t[1], 2.0 * c * t[1]);
    values[1] = y.0;
    slope[1] = y.1;
    let mut blow_up = None;
    for j in 1..t.len() - 1 {
        let h = (t[j + 1] - t[j]) / SUBSTEPS as f64;
        for s in 0..SUBSTEPS {
            y = heun3(&cfg, t[j] + s as f64 * h, y, h);
        }
        if !(y.0.abs() < BLOW_UP && y.1.is_finite()) {
            blow_up = Some(t[j]);
            break;
        }
        values[j + 1] = y.0;
        slope[j + 1] = y.1;
    }
    let first_zero = (0..t.len() - 1)
        .take_while(|&j| blow_up.map_or(true, |b| t[j + 1] <= b))
        .find(|&j| values[j] > 0.0 && values[j + 1] <= 0.0)
        .map(|j| hermite_root(t[j], t[j + 1], values[j], values[j + 1], slope[j], slope[j + 1]));
    Trajectory {
        profile: ReducedFunction::from_raw(grid.clone(), values),
        slope,
        blow_up,
        first_zero,
    }
}

/// Root in `[t0, t1]` of the cubic Hermite interpolant, given `y0 > 0 >= y1`.
fn hermite_root(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let h = t1 - t0;
    let cubic = |s: f64| {
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * h * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * h * d1
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if cubic(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    t0 + 0.5 * (lo + hi) * h
}

/// A one-signed arc of the shooting solution, ending at its first zero.
#[derive(Debug, Clone)]
pub struct ShootingArc {
    pub w0: f64,
    /// The interval between the starting end and the first zero.
    pub interval: (f64, f64),
    /// The Nehari-rescaled arc on the sub-grid of `interval`.
    pub arc: ReducedFunction,
    /// Nehari scale applied to the raw arc; close to 1 for an accurate solve.
    pub nehari_scale: f64,
    /// `(1/N) crit(arc)`.
    pub energy: f64,
}

/// Cuts the trajectory at its first zero and Nehari-rescales the positive arc.
pub fn arc_from_trajectory(grid: &Arc<OrbitGrid>, tr: &Trajectory, w0: f64, from_left: bool) -> Result<ShootingArc> {
    let zero = tr
        .first_zero
        .ok_or_else(|| Error::Degenerate(format!("trajectory from w0 = {w0} has no zero")))?;
    let interval = if from_left { (0.0, zero) } else { (zero, PI) };
    let sub = Arc::new(grid.subgrid(interval.0, interval.1)?);
    let values: Vec<f64> = sub
        .nodes()
        .iter()
        .map(|&s| {
            if (from_left && s >= zero) || (!from_left && s <= zero) {
                0.0
            } else {
                tr.profile.eval(s).max(0.0)
            }
        })
        .collect();
    let raw = ReducedFunction::new(sub, values)?;
    let p = grid.cfg().p_crit();
    let scale = (weighted_h1_normsq(&raw) / weighted_crit_integral(&raw, p)?).powf(1.0 / (p - 2.0));
    let arc = raw.scaled(scale);
    let energy = weighted_crit_integral(&arc, p)? / grid.cfg().dim() as f64;
    Ok(ShootingArc {
        w0,
        interval,
        arc,
        nehari_scale: scale,
        energy,
    })
}

/// Bisection on `w0` for the trajectory whose first zero is `target`.
pub fn shoot_to_zero(grid: &Arc<OrbitGrid>, target: f64, from_left: bool) -> Result<ShootingArc> {
    if !(target > 0.0 && target < PI) {
        return Err(Error::Domain(format!("target zero {target} not in (0, pi)")));
    }
    let lands_before = |w0: f64| -> Result<bool> {
        let tr = shoot_reduced_ode(grid, w0, from_left)?;
        Ok(match tr.first_zero {
            Some(z) if from_left => z < target,
            Some(z) => z > target,
            None => false,
        })
    };
    // Larger initial values concentrate the solution and pull the zero in.
    let base = grid.cfg().constant_solution();
    let mut lo = base;
    let mut hi = 2.0 * base;
    let mut doublings = 0;
    while !lands_before(hi)? {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Degenerate(format!("no initial value reaches zero at {target}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if lands_before(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let w0 = 0.5 * (lo + hi);
    let tr = shoot_reduced_ode(grid, w0, from_left)?;
    arc_from_trajectory(grid, &tr, w0, from_left)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_stays_constant() {
        let cfg = SymmetryConfig::new(2, 2).unwrap();
        let g = OrbitGrid::build(cfg, 128, 1.0).unwrap();
        let c = cfg.constant_solution();
        for from_left in [true, false] {
            let tr = shoot_reduced_ode(&g, c, from_left).unwrap();
            assert!(tr.blow_up.is_none());
            assert!(tr.first_zero.is_none());
            for v in tr.profile.values() {
                assert!((v - c).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn zero_stays_zero() {
        let g = OrbitGrid::build(SymmetryConfig::new(2, 3).unwrap(), 64, 1.0).unwrap();
        let tr = shoot_reduced_ode(&g, 0.0, true).unwrap();
        assert!(tr.profile.is_zero());
        assert!(shoot_reduced_ode(&g, -1.0, true).is_err());
    }

    #[test]
    fn hermite_root_of_line() {
        let r = hermite_root(1.0, 2.0, 1.0, -1.0, -2.0, -2.0);
        assert!((r - 1.5).abs() < 1e-14);
    }

    #[test]
    fn mirror_matches_swapped_config() {
        // Shooting from pi for (2, 3) is shooting from 0 for (3, 2), mirrored.
        let g23 = OrbitGrid::build(SymmetryConfig::new(2, 3).unwrap(), 128, 1.0).unwrap();
        let g32 = OrbitGrid::build(SymmetryConfig::new(3, 2).unwrap(), 128, 1.0).unwrap();
        let a = shoot_reduced_ode(&g23, 5.0, false).unwrap();
        let b = shoot_reduced_ode(&g32, 5.0, true).unwrap();
        let (za, zb) = (a.first_zero.unwrap(), b.first_zero.unwrap());
        assert!((za - (PI - zb)).abs() < 1e-12);
    }

    #[test]
    fn larger_start_hits_zero_sooner() {
        let g = OrbitGrid::build(SymmetryConfig::new(2, 2).unwrap(), 256, 1.0).unwrap();
        let z1 = shoot_reduced_ode(&g, 2.0, true).unwrap().first_zero.unwrap();
        let z2 = shoot_reduced_ode(&g, 4.0, true).unwrap().first_zero.unwrap();
        assert!(z2 < z1);
    }
}
