//! Optimal `M`-partitions of the orbit interval into consecutive intervals.
//!
//! Every invariant partition of the sphere that can be optimal is a set of
//! cut points `0 < a_1 < ... < a_{M-1} < pi`; its energy is the sum of the
//! least energies of the intervals between cuts.

mod nodal;
mod optimize;
mod verify;

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use dashmap::DashMap;
use serde::{Deserialize, Serialize};

use crate::discretization::OrbitGrid;
use crate::error::{Error, Result};
use crate::geometry::{boundary_radii, SymmetryConfig};
use crate::scalar::{least_energy_on_interval, SolverOptions, MIN_INTERIOR_NODES};

pub use nodal::{assemble_nodal, NodalSolution};
pub use optimize::{optimize_partition, OptimizedPartition, ScanOptions};
pub use verify::{
    verify_comparison, verify_monotone_in_m, verify_subadditivity, ComparisonReport, MonotoneReport,
    SubadditivityReport,
};

/// Cut points `0 < a_1 < ... < a_{M-1} < pi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalPartition {
    cfg: SymmetryConfig,
    cuts: Vec<f64>,
}

impl IntervalPartition {
    pub fn new(cfg: SymmetryConfig, cuts: Vec<f64>) -> Result<Self> {
        if let Some(c) = cuts.iter().find(|c| !(**c > 0.0 && **c < PI)) {
            return Err(Error::Domain(format!("cut {c} not in (0, pi)")));
        }
        if cuts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain(format!("cuts {cuts:?} are not strictly increasing")));
        }
        Ok(Self { cfg, cuts })
    }

    pub fn cfg(&self) -> &SymmetryConfig {
        &self.cfg
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    /// Number of pieces `M`.
    pub fn pieces(&self) -> usize {
        self.cuts.len() + 1
    }

    /// The intervals `(0, a_1), (a_1, a_2), ..., (a_{M-1}, pi)`.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let mut ends = Vec::with_capacity(self.cuts.len() + 2);
        ends.push(0.0);
        ends.extend_from_slice(&self.cuts);
        ends.push(PI);
        ends.windows(2).map(|w| (w[0], w[1])).collect()
    }

    /// Radii `(cos(a/2), sin(a/2))` of the torus over each cut.
    pub fn boundary_radii(&self) -> Vec<[f64; 2]> {
        self.cuts
            .iter()
            .map(|&a| {
                let (r1, r2) = boundary_radii(a).expect("cuts lie in (0, pi)");
                [r1, r2]
            })
            .collect()
    }

    /// Every interval holds enough grid nodes for a solve.
    pub fn check_resolved(&self, grid: &OrbitGrid) -> Result<()> {
        for (i, (a, b)) in self.intervals().into_iter().enumerate() {
            let inside = grid.nodes_inside(a, b);
            if inside < MIN_INTERIOR_NODES {
                return Err(Error::Resolution(format!(
                    "interval {i} ({a:.6}, {b:.6}) holds {inside} nodes, {MIN_INTERIOR_NODES} needed"
                )));
            }
        }
        Ok(())
    }
}

/// Interval least energies on one grid, memoized by endpoints.
///
/// The cache is shared by concurrent evaluations; entries are deterministic
/// functions of their key, so racing inserts store identical values.
pub struct PartitionSolver {
    grid: Arc<OrbitGrid>,
    opts: SolverOptions,
    cache: DashMap<(i64, i64), f64>,
    solves: AtomicUsize,
}

fn key(x: f64) -> i64 {
    (x * 1e12).round() as i64
}

impl PartitionSolver {
    pub fn new(grid: Arc<OrbitGrid>, opts: SolverOptions) -> Self {
        Self {
            grid,
            opts,
            cache: DashMap::new(),
            solves: AtomicUsize::new(0),
        }
    }

    pub fn grid(&self) -> &Arc<OrbitGrid> {
        &self.grid
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    /// Number of interval solves performed (cache misses).
    pub fn solves(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    /// Least energy of `(a, b)`.
    pub fn interval_energy(&self, a: f64, b: f64) -> Result<f64> {
        let k = (key(a), key(b));
        if let Some(e) = self.cache.get(&k) {
            return Ok(*e);
        }
        let e = least_energy_on_interval(&self.grid, a, b, &self.opts)?.energy;
        self.solves.fetch_add(1, Ordering::Relaxed);
        self.cache.insert(k, e);
        Ok(e)
    }

    /// Energies of the pieces of `p`; failures name the interval.
    pub fn interval_energies(&self, p: &IntervalPartition) -> Result<Vec<f64>> {
        p.intervals()
            .into_iter()
            .enumerate()
            .map(|(index, (a, b))| {
                self.interval_energy(a, b).map_err(|e| Error::Interval {
                    index,
                    a,
                    b,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    pub fn partition_energy(&self, p: &IntervalPartition) -> Result<f64> {
        Ok(self.interval_energies(p)?.iter().sum())
    }
}

/// Sum of the interval least energies of `p` (uncached).
pub fn partition_energy(p: &IntervalPartition, grid: &Arc<OrbitGrid>, opts: &SolverOptions) -> Result<f64> {
    PartitionSolver::new(grid.clone(), *opts).partition_energy(p)
}

/// Serialized partition result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(rename = "M")]
    pub pieces: usize,
    pub cuts: Vec<f64>,
    pub interval_energies: Vec<f64>,
    pub total: f64,
    pub boundary_radii: Vec<[f64; 2]>,
}

impl PartitionReport {
    pub fn new(p: &IntervalPartition, interval_energies: Vec<f64>) -> Self {
        let cfg = p.cfg();
        Self {
            m: cfg.m(),
            n: cfg.n(),
            dim: cfg.dim(),
            pieces: p.pieces(),
            cuts: p.cuts().to_vec(),
            total: interval_energies.iter().sum(),
            interval_energies,
            boundary_radii: p.boundary_radii(),
        }
    }
}
