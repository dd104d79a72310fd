use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::SymmetryConfig;

/// Smallest admissible number of cells for a full orbit grid.
pub const MIN_CELLS: usize = 32;

/// Cut points closer than this to an existing node are merged into it.
pub const SNAP_TOL: f64 = 1e-10;

const GAUSS_POINTS: usize = 8;

/// A discretization of a closed sub-interval of the orbit interval `[0, pi]`.
///
/// Integrals against the weight `h(t) dt` are product rules: the mass of node
/// `j` is the exact moment `int phi_j h dt` of its hat function (computed by
/// per-cell Gauss-Legendre), and the stiffness of a cell is `int_cell h dt`
/// divided by the squared cell width. With these, piecewise-linear profiles
/// have the energy of the corresponding finite element and constants are
/// integrated exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitGrid {
    cfg: SymmetryConfig,
    nodes: Vec<f64>,
    quad_weights: Vec<f64>,
    h_values: Vec<f64>,
    mass: Vec<f64>,
    cell_h: Vec<f64>,
}

impl OrbitGrid {
    /// Full grid on `[0, pi]` with `cells` cells. `grading >= 1` clusters nodes
    /// symmetrically towards both endpoints; `grading == 1` is uniform.
    pub fn build(cfg: SymmetryConfig, cells: usize, grading: f64) -> Result<Arc<Self>> {
        if cells < MIN_CELLS {
            return Err(Error::Resolution(format!(
                "grid needs at least {MIN_CELLS} cells, got {cells}"
            )));
        }
        if !(grading >= 1.0) || !grading.is_finite() {
            return Err(Error::Config(format!("grading must be >= 1, got {grading}")));
        }
        let mut nodes: Vec<f64> = (0..=cells)
            .map(|j| PI * graded_map(j as f64 / cells as f64, grading))
            .collect();
        nodes[0] = 0.0;
        nodes[cells] = PI;
        // Enforce exact mirror symmetry of the node set.
        for j in 0..=cells / 2 {
            nodes[cells - j] = PI - nodes[j];
        }
        Ok(Arc::new(Self::from_nodes(cfg, nodes)))
    }

    /// Default resolution for a configuration: 512 cells, graded when either
    /// factor has dimension four or more.
    pub fn default_for(cfg: SymmetryConfig) -> Arc<Self> {
        let grading = if cfg.m().max(cfg.n()) >= 4 { 2.0 } else { 1.0 };
        Self::build(cfg, 512, grading).expect("default grid parameters are valid")
    }

    pub(crate) fn from_nodes(cfg: SymmetryConfig, nodes: Vec<f64>) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        let (gx, gw) = gauss_legendre(GAUSS_POINTS);
        let count = nodes.len();
        let mut mass = vec![0.0; count];
        let mut cell_h = vec![0.0; count - 1];
        let mut quad_weights = vec![0.0; count];
        for c in 0..count - 1 {
            let (lo, hi) = (nodes[c], nodes[c + 1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            let (mut total, mut right) = (0.0, 0.0);
            for (&x, &w) in gx.iter().zip(&gw) {
                let hw = cfg.weight(mid + half * x) * w * half;
                total += hw;
                right += hw * 0.5 * (1.0 + x);
            }
            cell_h[c] = total;
            mass[c] += total - right;
            mass[c + 1] += right;
            quad_weights[c] += half;
            quad_weights[c + 1] += half;
        }
        let h_values = nodes.iter().map(|&t| cfg.weight(t)).collect();
        Self {
            cfg,
            nodes,
            quad_weights,
            h_values,
            mass,
            cell_h,
        }
    }

    /// Grid on `[a, b]`: the nodes of `self` strictly inside plus the two
    /// endpoints, which are merged with existing nodes closer than [`SNAP_TOL`].
    pub fn subgrid(&self, a: f64, b: f64) -> Result<Self> {
        let (lo, hi) = (self.nodes[0], *self.nodes.last().unwrap());
        if !(a >= lo - SNAP_TOL && b <= hi + SNAP_TOL && a < b) {
            return Err(Error::Domain(format!(
                "interval ({a}, {b}) is not inside [{lo}, {hi}]"
            )));
        }
        let a = self.snap(a.max(lo));
        let b = self.snap(b.min(hi));
        let mut nodes = Vec::with_capacity(self.nodes.len() + 2);
        nodes.push(a);
        nodes.extend(self.nodes.iter().copied().filter(|&t| t > a + SNAP_TOL && t < b - SNAP_TOL));
        nodes.push(b);
        Ok(Self::from_nodes(self.cfg, nodes))
    }

    /// The same grid with extra nodes inserted at `cuts`.
    pub fn with_cuts(&self, cuts: &[f64]) -> Self {
        let mut nodes = self.nodes.clone();
        for &c in cuts {
            let c = self.snap(c);
            if !nodes.iter().any(|&t| t == c) {
                nodes.push(c);
            }
        }
        nodes.sort_by(f64::total_cmp);
        Self::from_nodes(self.cfg, nodes)
    }

    fn snap(&self, x: f64) -> f64 {
        let j = self.nearest_node(x);
        if (self.nodes[j] - x).abs() < SNAP_TOL {
            self.nodes[j]
        } else {
            x
        }
    }

    /// Index of the node nearest to `x`.
    pub fn nearest_node(&self, x: f64) -> usize {
        let j = self.nodes.partition_point(|&t| t < x);
        if j == 0 {
            0
        } else if j == self.nodes.len() {
            j - 1
        } else if (self.nodes[j] - x).abs() < (x - self.nodes[j - 1]).abs() {
            j
        } else {
            j - 1
        }
    }

    /// Number of nodes strictly inside `(a, b)`.
    pub fn nodes_inside(&self, a: f64, b: f64) -> usize {
        self.nodes
            .iter()
            .filter(|&&t| t > a + SNAP_TOL && t < b - SNAP_TOL)
            .count()
    }

    pub fn cfg(&self) -> &SymmetryConfig {
        &self.cfg
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Plain trapezoid weights in `t` (unweighted integrals).
    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    pub fn h_values(&self) -> &[f64] {
        &self.h_values
    }

    /// Product weights: `int f h dt ~ sum_j mass[j] f(t_j)`.
    pub fn measure_weights(&self) -> &[f64] {
        &self.mass
    }

    /// `int_cell h dt` for each cell.
    pub fn cell_measures(&self) -> &[f64] {
        &self.cell_h
    }

    /// Stiffness `int_cell h dt / width^2` of cell `c`.
    pub fn cell_stiffness(&self, c: usize) -> f64 {
        let d = self.nodes[c + 1] - self.nodes[c];
        self.cell_h[c] / (d * d)
    }

    /// `int h dt` over the grid's span.
    pub fn weight_integral(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Largest cell width.
    pub fn max_spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Whether an endpoint of the span is an exceptional orbit (0 or pi).
    pub fn starts_at_axis(&self) -> bool {
        self.nodes[0] == 0.0
    }

    pub fn ends_at_axis(&self) -> bool {
        *self.nodes.last().unwrap() == PI
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        *self.nodes.last().unwrap()
    }
}

/// Symmetric graded map of `[0, 1]` onto itself; `gamma = 1` is the identity.
fn graded_map(x: f64, gamma: f64) -> f64 {
    if gamma == 1.0 {
        return x;
    }
    let l = x.powf(gamma);
    let r = (1.0 - x).powf(gamma);
    l / (l + r)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}
