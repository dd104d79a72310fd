use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::scalar::MIN_INTERIOR_NODES;

use super::{IntervalPartition, PartitionSolver};

const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanOptions {
    /// Candidate positions per cut in the coarse scan.
    pub points: usize,
    /// Upper bound on the number of coarse tuples; the scan gets coarser to respect it.
    pub max_evaluations: usize,
    /// Coordinate-wise golden-section sweeps after the scan.
    pub sweeps: usize,
    pub xtol: f64,
    /// Newton steps on central-difference derivatives after the sweeps.
    pub newton_steps: usize,
    /// Step of the central differences.
    pub fd_step: f64,
    /// Newton stops once every central difference is below this.
    pub grad_tol: f64,
    /// Minima closer than this (relative) in energy are reported as alternates.
    pub tol_energy: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            points: 33,
            max_evaluations: 100_000,
            sweeps: 3,
            xtol: 1e-7,
            newton_steps: 8,
            fd_step: 1e-3,
            grad_tol: 1e-5,
            tol_energy: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizedPartition {
    pub partition: IntervalPartition,
    pub energy: f64,
    pub interval_energies: Vec<f64>,
    /// Other cut tuples whose energy ties with the optimum.
    pub alternates: Vec<IntervalPartition>,
    /// Coarse tuples evaluated by the scan.
    pub scanned: usize,
}

/// Minimizes the partition energy over `0 < a_1 < ... < a_{M-1} < pi`:
/// a scan over tuples of equally spaced candidates, then golden-section
/// refinement of one cut at a time starting from the best local minima.
pub fn optimize_partition(solver: &PartitionSolver, pieces: usize, scan: &ScanOptions) -> Result<OptimizedPartition> {
    if pieces < 2 {
        return Err(Error::Config(format!("M = {pieces}, at least 2 pieces required")));
    }
    let dims = pieces - 1;
    let mut points = scan.points;
    while points > dims && binomial(points, dims) > scan.max_evaluations {
        points -= 1;
    }
    if points < dims {
        return Err(Error::Config(format!("scan of {points} points cannot place {dims} cuts")));
    }
    let step = PI / (points + 1) as f64;
    let tuples = combinations(points, dims);
    let values: Vec<f64> = tuples
        .par_iter()
        .map(|t| objective(solver, &to_cuts(t, step)))
        .collect::<Result<Vec<_>>>()?;
    let index: std::collections::HashMap<&[usize], usize> =
        tuples.iter().enumerate().map(|(i, t)| (t.as_slice(), i)).collect();

    let mut minima: Vec<usize> = (0..tuples.len())
        .filter(|&i| values[i].is_finite())
        .filter(|&i| {
            neighbours(&tuples[i], points)
                .iter()
                .all(|nb| index.get(nb.as_slice()).map_or(true, |&j| values[i] <= values[j]))
        })
        .collect();
    if minima.is_empty() {
        return Err(Error::Resolution(format!(
            "no {pieces}-piece partition has {MIN_INTERIOR_NODES} nodes per interval on this grid"
        )));
    }
    minima.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(tuples[i].cmp(&tuples[j])));
    minima.truncate(2);

    let mut polished = Vec::new();
    for &i in &minima {
        let (cuts, value) = polish(solver, to_cuts(&tuples[i], step), step, scan)?;
        polished.push((cuts, value));
    }
    polished.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (mut best_cuts, mut best_value) = polished[0].clone();
    let mut alternates = Vec::new();
    if let Some((cuts, value)) = polished.get(1) {
        let tied = (value - best_value).abs() <= scan.tol_energy * best_value.abs().max(1.0);
        let distinct = cuts.iter().zip(&best_cuts).any(|(x, y)| (x - y).abs() > 1e-3);
        if tied && distinct {
            let (first, second) = if lex_less(cuts, &best_cuts) {
                ((cuts.clone(), *value), (best_cuts.clone(), best_value))
            } else {
                ((best_cuts.clone(), best_value), (cuts.clone(), *value))
            };
            (best_cuts, best_value) = first;
            alternates.push(IntervalPartition::new(*solver.grid().cfg(), second.0)?);
        }
    }
    let partition = IntervalPartition::new(*solver.grid().cfg(), best_cuts)?;
    for (i, (a, b)) in partition.intervals().into_iter().enumerate() {
        if solver.grid().nodes_inside(a, b) <= MIN_INTERIOR_NODES + 1 {
            return Err(Error::Degeneracy(format!(
                "interval {i} ({a:.6}, {b:.6}) shrank to the resolution limit; refine the grid"
            )));
        }
    }
    let interval_energies = solver.interval_energies(&partition)?;
    Ok(OptimizedPartition {
        partition,
        energy: best_value,
        interval_energies,
        alternates,
        scanned: tuples.len(),
    })
}

fn lex_less(x: &[f64], y: &[f64]) -> bool {
    x.iter().zip(y).find(|(a, b)| a != b).is_some_and(|(a, b)| a < b)
}

/// Partition energy, or `+inf` if some interval is too thin for the grid.
fn objective(solver: &PartitionSolver, cuts: &[f64]) -> Result<f64> {
    let Ok(p) = IntervalPartition::new(*solver.grid().cfg(), cuts.to_vec()) else {
        return Ok(f64::INFINITY);
    };
    if p.check_resolved(solver.grid()).is_err() {
        return Ok(f64::INFINITY);
    }
    solver.partition_energy(&p)
}

fn to_cuts(t: &[usize], step: f64) -> Vec<f64> {
    t.iter().map(|&k| k as f64 * step).collect()
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Strictly increasing `k`-tuples from `1..=n`, in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (1..=k).collect();
    if k == 0 || k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - (k - 1 - i)) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

fn neighbours(t: &[usize], n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for i in 0..t.len() {
        for delta in [-1isize, 1] {
            let v = t[i] as isize + delta;
            if v < 1 || v > n as isize {
                continue;
            }
            let mut nb = t.to_vec();
            nb[i] = v as usize;
            if nb.windows(2).all(|w| w[0] < w[1]) {
                out.push(nb);
            }
        }
    }
    out
}

/// Golden-section search on each cut in turn, bracket `+-h` shrinking by 4 per sweep.
fn polish(solver: &PartitionSolver, mut cuts: Vec<f64>, h: f64, scan: &ScanOptions) -> Result<(Vec<f64>, f64)> {
    let mut value = objective(solver, &cuts)?;
    let mut width = h;
    for _ in 0..scan.sweeps {
        for i in 0..cuts.len() {
            let lo = (cuts[i] - width).max(if i == 0 { 0.0 } else { cuts[i - 1] });
            let hi = (cuts[i] + width).min(cuts.get(i + 1).copied().unwrap_or(PI));
            let mut f = |x: f64| -> Result<f64> {
                let mut c = cuts.clone();
                c[i] = x;
                objective(solver, &c)
            };
            let (x, fx) = golden_section(&mut f, lo, hi, scan.xtol)?;
            if fx < value {
                cuts[i] = x;
                value = fx;
            }
        }
        width *= 0.25;
    }
    newton(solver, cuts, value, scan)
}

/// Central-difference gradient and Hessian of the objective at `x`.
fn derivatives(solver: &PartitionSolver, x: &[f64], fx: f64, s: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let d = x.len();
    let at = |shifts: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, e) in shifts {
            y[i] += e;
        }
        objective(solver, &y)
    };
    let mut g = vec![0.0; d];
    let mut h = vec![vec![0.0; d]; d];
    for i in 0..d {
        let (fp, fm) = (at(&[(i, s)])?, at(&[(i, -s)])?);
        g[i] = (fp - fm) / (2.0 * s);
        h[i][i] = (fp - 2.0 * fx + fm) / (s * s);
        for j in 0..i {
            let v = (at(&[(i, s), (j, s)])? - at(&[(i, s), (j, -s)])? - at(&[(i, -s), (j, s)])?
                + at(&[(i, -s), (j, -s)])?)
                / (4.0 * s * s);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    Ok((g, h))
}

/// Newton iteration on the finite-difference derivatives. Near the optimum
/// energy differences sit at roundoff level, so a step is kept when it
/// shrinks the largest central difference.
fn newton(solver: &PartitionSolver, mut cuts: Vec<f64>, mut value: f64, scan: &ScanOptions) -> Result<(Vec<f64>, f64)> {
    let sup = |g: &[f64]| g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let (mut g, mut h) = derivatives(solver, &cuts, value, scan.fd_step)?;
    for _ in 0..scan.newton_steps {
        if !sup(&g).is_finite() || sup(&g) <= scan.grad_tol {
            break;
        }
        let Some(step) = solve_dense(h.clone(), g.clone()) else { break };
        let trial: Vec<f64> = cuts.iter().zip(&step).map(|(c, d)| c - d).collect();
        let fx = objective(solver, &trial)?;
        if !fx.is_finite() {
            break;
        }
        let (gt, ht) = derivatives(solver, &trial, fx, scan.fd_step)?;
        if !(sup(&gt) < sup(&g)) {
            break;
        }
        (cuts, value, g, h) = (trial, fx, gt, ht);
    }
    Ok((cuts, value))
}

fn golden_section(f: &mut impl FnMut(f64) -> Result<f64>, mut lo: f64, mut hi: f64, xtol: f64) -> Result<(f64, f64)> {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > xtol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}
