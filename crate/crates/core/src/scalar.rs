//! Least-energy positive solutions of the reduced Yamabe problem on an
//! orbit interval.
//!
//! A solve minimizes the Rayleigh quotient `Q(w) = |w|^2 / crit(w)^{2/p}` over
//! profiles vanishing at the interior ends of the interval. The descent uses
//! the gradient of `Q` in the energy inner product (a preconditioned gradient),
//! Barzilai-Borwein steps with Armijo backtracking, the retraction `w -> |w|`
//! and a Nehari rescale after every step. Once the descent has stalled, a
//! few Newton steps on the discrete Euler-Lagrange equation remove the
//! remaining error.

use std::f64::consts::PI;
use std::ops::Range;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discretization::{
    normsq_raw, pow_abs, reduced_residual, residual_sup_away_from, signed_pow, weighted_crit_integral,
    weighted_h1_normsq, OrbitGrid, ReducedFunction,
};
use crate::error::{Error, Result};
use crate::linalg::{energy_operator, Tridiagonal};

/// Intervals must contain at least this many grid nodes strictly inside.
pub const MIN_INTERIOR_NODES: usize = 8;

/// Residuals are measured at nodes at least this many cells from a cut.
pub const CUT_MARGIN_CELLS: f64 = 3.0;

const NEWTON_STEPS: usize = 30;
/// Relative decrease of `Q` below which a descent step counts as stalled.
const DESCENT_RTOL: f64 = 1e-10;
const MAX_BACKTRACKS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Relative change of the energy below which the descent stops.
    pub tol_energy: f64,
    /// Bound for the strong-form residual away from cuts.
    pub tol_res: f64,
    /// Relative tolerance of the Nehari identity.
    pub tol_nehari: f64,
    /// Descent stops once the sup norm of the preconditioned gradient is below this.
    pub tol_grad: f64,
    pub seed: u64,
    /// Extra solves from randomly perturbed starts (0 = deterministic bump only).
    pub restarts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            tol_energy: 1e-9,
            tol_res: 1e-4,
            tol_nehari: 1e-10,
            tol_grad: 1e-8,
            seed: 0,
            restarts: 0,
        }
    }
}

/// A positive least-energy solution on `(a, b)`.
#[derive(Debug, Clone)]
pub struct ScalarSolution {
    pub interval: (f64, f64),
    /// Profile on the sub-grid of `[a, b]`: the base grid's interior nodes plus both ends.
    pub profile: ReducedFunction,
    /// `(1/N) crit(profile)`.
    pub energy: f64,
    /// Largest strong-form residual at nodes at least three cells from the cuts.
    pub residual_sup: f64,
    pub iterations: usize,
    /// Set when restarts reached distinct profiles of equal energy.
    pub multiplicity: bool,
}

impl ScalarSolution {
    /// The profile on another grid, extended by zero outside `[a, b]`.
    pub fn embed(&self, grid: &Arc<OrbitGrid>) -> ReducedFunction {
        self.profile.resample(grid)
    }

    /// `|normsq - crit| / normsq` of the profile.
    pub fn nehari_defect(&self) -> f64 {
        let p = self.profile.grid().cfg().p_crit();
        let n = weighted_h1_normsq(&self.profile);
        let c = weighted_crit_integral(&self.profile, p).unwrap_or(f64::NAN);
        (n - c).abs() / n
    }
}

/// The scale `t > 0` with `t w` on the Nehari set.
pub fn nehari_scale(w: &ReducedFunction) -> Result<f64> {
    let p = w.grid().cfg().p_crit();
    let n = weighted_h1_normsq(w);
    let c = weighted_crit_integral(w, p)?;
    if w.is_zero() || c <= 0.0 || n <= 0.0 {
        return Err(Error::Degenerate("Nehari scale of the zero function".into()));
    }
    Ok((n / c).powf(1.0 / (p - 2.0)))
}

/// `L^2(h)`-gradient of `J(w) = |w|^2/2 - crit(w)/p` on the full grid of `w`,
/// for the inner product `(1/4) int u v h dt`.
pub fn energy_gradient(w: &ReducedFunction) -> ReducedFunction {
    let grid = w.grid();
    let p = grid.cfg().p_crit();
    let mut g = vec![0.0; grid.len()];
    crate::discretization::apply_energy_operator(grid, w.values(), &mut g);
    let mass = grid.measure_weights();
    for ((gj, m), v) in g.iter_mut().zip(mass).zip(w.values()) {
        *gj = 4.0 * (*gj / m) - signed_pow(*v, p);
    }
    ReducedFunction::from_raw(grid.clone(), g)
}

/// Least energy on `(a, b)` starting from the sine bump.
pub fn least_energy_on_interval(
    grid: &Arc<OrbitGrid>,
    a: f64,
    b: f64,
    opts: &SolverOptions,
) -> Result<ScalarSolution> {
    let problem = IntervalProblem::new(grid, a, b)?;
    let bump = problem.bump();
    let mut best = problem.solve(bump.clone(), opts)?;
    if opts.restarts == 0 {
        return Ok(best);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        let coeffs: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.4..0.4)).collect();
        let sub = problem.grid.clone();
        let (lo, hi) = (sub.lo(), sub.hi());
        let guess: Vec<f64> = sub
            .nodes()
            .iter()
            .zip(&problem.expand(&bump))
            .map(|(t, v)| {
                let s = (t - lo) / (hi - lo);
                let bend: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * (PI * (k + 1) as f64 * s).sin())
                    .sum();
                v * (1.0 + bend).abs()
            })
            .collect();
        let Ok(sol) = problem.solve(problem.restrict(guess), opts) else {
            continue;
        };
        let tol = opts.tol_energy * best.energy.abs().max(1.0);
        if sol.energy < best.energy - tol {
            best = sol;
        } else if (sol.energy - best.energy).abs() <= tol {
            let scale = best.profile.sup_norm();
            let differs = sol
                .profile
                .values()
                .iter()
                .zip(best.profile.values())
                .any(|(x, y)| (x - y).abs() > 1e-6 * scale);
            if differs {
                let smaller = lexicographically_less(sol.profile.values(), best.profile.values());
                let mut chosen = if smaller { sol } else { best };
                chosen.multiplicity = true;
                best = chosen;
            }
        }
    }
    Ok(best)
}

/// Least energy on `(a, b)` starting from `guess` (resampled onto the
/// interval's sub-grid and masked to it).
pub fn least_energy_from_guess(
    grid: &Arc<OrbitGrid>,
    a: f64,
    b: f64,
    guess: &ReducedFunction,
    opts: &SolverOptions,
) -> Result<ScalarSolution> {
    let problem = IntervalProblem::new(grid, a, b)?;
    let values: Vec<f64> = problem.grid.nodes().iter().map(|&t| guess.eval(t).abs()).collect();
    let x = problem.restrict(values);
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::Degenerate("initial guess vanishes on the interval".into()));
    }
    problem.solve(x, opts)
}

fn lexicographically_less(x: &[f64], y: &[f64]) -> bool {
    for (a, b) in x.iter().zip(y) {
        if a < b {
            return true;
        }
        if a > b {
            return false;
        }
    }
    false
}

/// Discrete problem on one interval: a sub-grid and the range of free nodes.
struct IntervalProblem {
    grid: Arc<OrbitGrid>,
    free: Range<usize>,
    op: Tridiagonal,
    interval: (f64, f64),
}

impl IntervalProblem {
    fn new(grid: &Arc<OrbitGrid>, a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && b <= PI && a < b) {
            return Err(Error::Domain(format!("interval ({a}, {b}) is not inside [0, pi]")));
        }
        let inside = grid.nodes_inside(a, b);
        if inside < MIN_INTERIOR_NODES {
            return Err(Error::Resolution(format!(
                "interval ({a:.6}, {b:.6}) holds {inside} grid nodes, at least {MIN_INTERIOR_NODES} needed"
            )));
        }
        let sub = if a <= grid.lo() && b >= grid.hi() {
            grid.clone()
        } else {
            Arc::new(grid.subgrid(a, b)?)
        };
        let lo = usize::from(!sub.starts_at_axis());
        let hi = sub.len() - usize::from(!sub.ends_at_axis());
        let op = energy_operator(&sub, lo..hi, None);
        Ok(Self {
            interval: (sub.lo(), sub.hi()),
            grid: sub,
            free: lo..hi,
            op,
        })
    }

    fn restrict(&self, full: Vec<f64>) -> Vec<f64> {
        full[self.free.clone()].to_vec()
    }

    fn bump(&self) -> Vec<f64> {
        let (a, b) = self.interval;
        let full: Vec<f64> = self
            .grid
            .nodes()
            .iter()
            .map(|&t| {
                if a == 0.0 && b == PI {
                    // Whole interval: no zero to enforce, start off the constant.
                    1.0 + 0.3 * t.cos()
                } else {
                    (PI * (t - a) / (b - a)).sin().max(0.0)
                }
            })
            .collect();
        self.restrict(full)
    }

    fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.grid.len()];
        full[self.free.clone()].copy_from_slice(x);
        full
    }

    fn mass(&self) -> &[f64] {
        &self.grid.measure_weights()[self.free.clone()]
    }

    fn p(&self) -> f64 {
        self.grid.cfg().p_crit()
    }

    fn normsq(&self, x: &[f64]) -> f64 {
        normsq_raw(&self.grid, &self.expand(x))
    }

    fn crit(&self, x: &[f64]) -> f64 {
        let p = self.p();
        0.25 * self.mass().iter().zip(x).map(|(m, v)| m * pow_abs(*v, p)).sum::<f64>()
    }

    /// `(1/4) m |x|^{p-2} x`, the derivative of `crit / p`.
    fn nonlinearity(&self, x: &[f64]) -> Vec<f64> {
        let p = self.p();
        self.mass().iter().zip(x).map(|(m, v)| 0.25 * m * signed_pow(*v, p)).collect()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let t = &self.op;
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = t.diag[i] * x[i];
                if i > 0 {
                    s += t.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += t.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    fn rayleigh(&self, x: &[f64]) -> f64 {
        self.normsq(x) / self.crit(x).powf(2.0 / self.p())
    }

    fn nehari_rescale(&self, x: &mut [f64]) -> Result<()> {
        let (n, c) = (self.normsq(x), self.crit(x));
        if !(n > 0.0 && c > 0.0) {
            return Err(Error::Degenerate("iterate vanished during descent".into()));
        }
        let s = (n / c).powf(1.0 / (self.p() - 2.0));
        x.iter_mut().for_each(|v| *v *= s);
        Ok(())
    }

    /// Preconditioned gradient direction `x - (|x|^2/crit) A^{-1} f(x)` of `Q`.
    fn direction(&self, x: &[f64]) -> Result<Vec<f64>> {
        let f = self.nonlinearity(x);
        let u = self
            .op
            .solve_dominant(&f)
            .ok_or_else(|| Error::Degenerate("singular energy operator".into()))?;
        let ratio = self.normsq(x) / self.crit(x);
        Ok(x.iter().zip(&u).map(|(xi, ui)| xi - ratio * ui).collect())
    }

    fn a_dot(&self, x: &[f64], y: &[f64]) -> f64 {
        self.apply(x).iter().zip(y).map(|(a, b)| a * b).sum()
    }

    fn descend(&self, mut x: Vec<f64>, opts: &SolverOptions) -> Result<(Vec<f64>, usize, bool)> {
        self.nehari_rescale(&mut x)?;
        let mut q = self.rayleigh(&x);
        let mut d = self.direction(&x)?;
        let mut tau = 1.0;
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut small_steps = 0;
        for it in 0..opts.max_iters {
            let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if d.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= opts.tol_grad * scale.max(1.0) {
                return Ok((x, it, true));
            }
            if let Some((px, pd)) = &prev {
                let s: Vec<f64> = x.iter().zip(px).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = d.iter().zip(pd).map(|(a, b)| a - b).collect();
                let sy = self.a_dot(&s, &y);
                if sy > 0.0 {
                    tau = (self.a_dot(&s, &s) / sy).clamp(1e-3, 10.0);
                }
            }
            let slope = 2.0 * self.a_dot(&d, &d) / self.crit(&x).powf(2.0 / self.p());
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                let mut trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| (a - tau * b).abs()).collect();
                if self.nehari_rescale(&mut trial).is_ok() {
                    let qt = self.rayleigh(&trial);
                    if qt <= q - 1e-4 * tau * slope {
                        accepted = Some((trial, qt));
                        break;
                    }
                }
                tau *= 0.5;
            }
            let Some((trial, qt)) = accepted else {
                // No decrease at any step size: the descent has stalled.
                return Ok((x, it, false));
            };
            let change = (q - qt) / q;
            let nd = self.direction(&trial)?;
            prev = Some((std::mem::replace(&mut x, trial), std::mem::replace(&mut d, nd)));
            q = qt;
            small_steps = if change < DESCENT_RTOL { small_steps + 1 } else { 0 };
            if small_steps >= 2 {
                return Ok((x, it + 1, true));
            }
        }
        Ok((x, opts.max_iters, false))
    }

    /// Euler-Lagrange defect `A x - f(x)`.
    fn defect(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.apply(x);
        let f = self.nonlinearity(x);
        ax.iter().zip(&f).map(|(a, b)| a - b).collect()
    }

    fn relative_defect(&self, x: &[f64]) -> f64 {
        let r = self.defect(x);
        let f = self.nonlinearity(x);
        let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        r.iter().fold(0.0f64, |m, v| m.max(v.abs())) / fmax.max(f64::MIN_POSITIVE)
    }

    /// Newton iteration on `A x = f(x)`; keeps the input if it does not help.
    fn polish(&self, x: Vec<f64>) -> Vec<f64> {
        let p = self.p();
        let mut best_err = self.relative_defect(&x);
        let mut best = x.clone();
        let mut cur = x;
        for _ in 0..NEWTON_STEPS {
            let mut jac = self.op.clone();
            for ((d, m), v) in jac.diag.iter_mut().zip(self.mass()).zip(&cur) {
                *d -= 0.25 * (p - 1.0) * m * pow_abs(*v, p - 2.0);
            }
            let Some(step) = jac.solve_pivoted(&self.defect(&cur)) else {
                break;
            };
            cur.iter_mut().zip(&step).for_each(|(c, s)| *c -= s);
            let err = self.relative_defect(&cur);
            if !(err < best_err) {
                break;
            }
            best_err = err;
            best.clone_from(&cur);
            if err < 1e-14 {
                break;
            }
        }
        best
    }

    fn solve(&self, x0: Vec<f64>, opts: &SolverOptions) -> Result<ScalarSolution> {
        let (x, iterations, _) = self.descend(x0, opts)?;
        let mut x = self.polish(x);
        if x.iter().any(|v| *v < -1e-8 * x.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
            return Err(Error::Convergence {
                iterations,
                residual: self.relative_defect(&x),
                last: Box::new(ReducedFunction::from_raw(self.grid.clone(), self.expand(&x))),
            });
        }
        x.iter_mut().for_each(|v| *v = v.abs());
        self.nehari_rescale(&mut x)?;
        let defect = self.relative_defect(&x);
        let profile = ReducedFunction::from_raw(self.grid.clone(), self.expand(&x));
        if !(defect <= 1e-6) {
            return Err(Error::Convergence {
                iterations,
                residual: defect,
                last: Box::new(profile),
            });
        }
        let (a, b) = self.interval;
        let cfg = self.grid.cfg();
        let energy = self.crit(&x) / cfg.dim() as f64;
        let residual = reduced_residual(&profile, (a, b))?;
        let cuts: Vec<f64> = [a, b].into_iter().filter(|&c| c > 0.0 && c < PI).collect();
        let residual_sup = residual_sup_away_from(&residual, &cuts, CUT_MARGIN_CELLS);
        Ok(ScalarSolution {
            interval: (a, b),
            profile,
            energy,
            residual_sup,
            iterations,
            multiplicity: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SymmetryConfig;

    fn grid(m: usize, n: usize, k: usize) -> Arc<OrbitGrid> {
        OrbitGrid::build(SymmetryConfig::new(m, n).unwrap(), k, 1.0).unwrap()
    }

    #[test]
    fn nehari_scale_formula() {
        let g = grid(2, 2, 64);
        let w = ReducedFunction::from_fn(g, |t| 1.0 + 0.2 * t.sin());
        let s = nehari_scale(&w).unwrap();
        let ws = w.scaled(s);
        let n = weighted_h1_normsq(&ws);
        let c = weighted_crit_integral(&ws, 6.0).unwrap();
        assert!((n - c).abs() < 1e-12 * n);
        assert!((nehari_scale(&ws).unwrap() - 1.0).abs() < 1e-12);
        assert!((nehari_scale(&w.scaled(3.0)).unwrap() - s / 3.0).abs() < 1e-12);
    }

    #[test]
    fn nehari_scale_of_zero_fails() {
        let g = grid(2, 2, 64);
        assert!(matches!(nehari_scale(&ReducedFunction::zeros(g)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn whole_interval_is_constant() {
        let g = grid(2, 2, 128);
        let cfg = *g.cfg();
        let sol = least_energy_on_interval(&g, 0.0, PI, &SolverOptions::default()).unwrap();
        assert!(sol.energy <= cfg.constant_solution_energy() + 1e-9);
        assert!((sol.energy - cfg.constant_solution_energy()).abs() < 1e-8);
        assert!(sol.nehari_defect() < 1e-10);
    }

    #[test]
    fn symmetric_halves() {
        let g = grid(2, 2, 128);
        let o = SolverOptions::default();
        let l = least_energy_on_interval(&g, 0.0, PI / 2.0, &o).unwrap();
        let r = least_energy_on_interval(&g, PI / 2.0, PI, &o).unwrap();
        assert!((l.energy - r.energy).abs() < 1e-9, "{} {}", l.energy, r.energy);
        assert!(l.profile.values().iter().all(|&v| v >= 0.0));
        assert_eq!(*l.profile.values().last().unwrap(), 0.0);
    }

    #[test]
    fn too_thin_interval() {
        let g = grid(2, 2, 64);
        let err = least_energy_on_interval(&g, 1.0, 1.1, &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Resolution(_)));
    }

    #[test]
    fn energy_gradient_vanishes_at_constant() {
        let g = grid(2, 3, 64);
        let c = g.cfg().constant_solution();
        let w = ReducedFunction::from_fn(g, |_| c);
        assert!(energy_gradient(&w).sup_norm() < 1e-10);
    }
}
