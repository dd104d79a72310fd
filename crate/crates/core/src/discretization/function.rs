use std::fmt::Write as _;
use std::io;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

use super::OrbitGrid;

/// An invariant function on the sphere, stored as its orbit profile `w(t)`
/// sampled at the nodes of a grid. The sphere function is `u = w o q`.
#[derive(Debug, Clone)]
pub struct ReducedFunction {
    grid: Arc<OrbitGrid>,
    values: Vec<f64>,
}

impl ReducedFunction {
    pub fn new(grid: Arc<OrbitGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at node {j}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<OrbitGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Arc<OrbitGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&t| f(t)).collect();
        Self { grid, values }
    }

    /// Sine bump on `(a, b)`, zero elsewhere.
    pub fn bump(grid: Arc<OrbitGrid>, a: f64, b: f64) -> Self {
        Self::from_fn(grid, |t| {
            if t > a && t < b {
                (std::f64::consts::PI * (t - a) / (b - a)).sin()
            } else {
                0.0
            }
        })
    }

    pub(crate) fn from_raw(grid: Arc<OrbitGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<OrbitGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    pub fn abs(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.abs()).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid.nodes() == other.grid.nodes()
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// True when every node outside `[a, b]` carries a zero value.
    pub fn is_supported_in(&self, a: f64, b: f64) -> bool {
        self.grid
            .nodes()
            .iter()
            .zip(&self.values)
            .all(|(&t, &v)| (t >= a && t <= b) || v == 0.0)
    }

    /// Number of strict sign changes along the grid, ignoring zero nodes.
    pub fn sign_changes(&self) -> usize {
        let mut last = 0.0f64;
        let mut count = 0;
        for &v in &self.values {
            if v != 0.0 {
                if last != 0.0 && v.signum() != last.signum() {
                    count += 1;
                }
                last = v;
            }
        }
        count
    }

    /// Piecewise-linear interpolant evaluated at `t`; zero outside the grid's span.
    pub fn eval(&self, t: f64) -> f64 {
        let nodes = self.grid.nodes();
        if t < nodes[0] || t > nodes[nodes.len() - 1] {
            return 0.0;
        }
        let j = nodes.partition_point(|&x| x <= t);
        if j == 0 {
            return self.values[0];
        }
        if j == nodes.len() {
            return self.values[j - 1];
        }
        let (t0, t1) = (nodes[j - 1], nodes[j]);
        let s = (t - t0) / (t1 - t0);
        (1.0 - s) * self.values[j - 1] + s * self.values[j]
    }

    /// Transfers the function onto `target` by linear interpolation. Nodes
    /// shared by both grids keep their values exactly.
    pub fn resample(&self, target: &Arc<OrbitGrid>) -> Self {
        let values = target.nodes().iter().map(|&t| self.eval(t)).collect();
        Self {
            grid: target.clone(),
            values,
        }
    }

    /// CSV with header `t,w`, one row per node, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,w\n");
        for (t, w) in self.grid.nodes().iter().zip(&self.values) {
            let _ = writeln!(out, "{},{}", fmt_sig17(*t), fmt_sig17(*w));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt_sig17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SymmetryConfig;

    fn grid() -> Arc<OrbitGrid> {
        OrbitGrid::build(SymmetryConfig::new(2, 2).unwrap(), 32, 1.0).unwrap()
    }

    #[test]
    fn rejects_bad_lengths_and_nan() {
        let g = grid();
        assert!(ReducedFunction::new(g.clone(), vec![0.0; 3]).is_err());
        let mut v = vec![0.0; g.len()];
        v[4] = f64::NAN;
        assert!(ReducedFunction::new(g, v).is_err());
    }

    #[test]
    fn csv_format() {
        let w = ReducedFunction::from_fn(grid(), |t| t.cos());
        let csv = w.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,w"));
        let first = lines.next().unwrap();
        assert_eq!(first, "0.0000000000000000e0,1.0000000000000000e0");
        assert_eq!(csv.lines().count(), 34);
        let row: Vec<f64> = csv.lines().nth(5).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(row[1], w.values()[4]);
    }

    #[test]
    fn sign_changes_skip_zeros() {
        let g = grid();
        let w = ReducedFunction::from_fn(g, |t| (2.0 * t).cos());
        assert_eq!(w.sign_changes(), 2);
    }

    #[test]
    fn resample_keeps_shared_nodes() {
        let g = grid();
        let w = ReducedFunction::from_fn(g.clone(), |t| t.sin());
        let fine = Arc::new(g.with_cuts(&[0.777, 2.5]));
        let r = w.resample(&fine);
        for (t, v) in fine.nodes().iter().zip(r.values()) {
            if let Some(j) = g.nodes().iter().position(|x| x == t) {
                assert_eq!(*v, w.values()[j]);
            }
        }
        assert_eq!(r.values().len(), fine.len());
    }
}
