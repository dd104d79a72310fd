use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{optimize_partition, PartitionSolver, ScanOptions};

/// `energy(a, c) < min(energy(a, b), energy(b, c))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityReport {
    pub triple: [f64; 3],
    pub lhs: f64,
    /// `None` when both halves are too thin to resolve (their energy is unbounded).
    pub rhs: Option<f64>,
    pub margin: Option<f64>,
    pub pass: bool,
}

/// Compares the energy of `(a, c)` with those of its halves `(a, b)` and `(b, c)`.
/// A half too thin for the grid counts as infinite energy.
pub fn verify_subadditivity(solver: &PartitionSolver, a: f64, b: f64, c: f64) -> Result<SubadditivityReport> {
    if !(0.0 <= a && a < b && b < c && c <= std::f64::consts::PI) {
        return Err(Error::Domain(format!("need 0 <= a < b < c <= pi, got ({a}, {b}, {c})")));
    }
    let lhs = solver.interval_energy(a, c)?;
    let half = |x: f64, y: f64| match solver.interval_energy(x, y) {
        Ok(e) => Ok(Some(e)),
        Err(Error::Resolution(_)) => Ok(None),
        Err(e) => Err(e),
    };
    let rhs = match (half(a, b)?, half(b, c)?) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    };
    let tol = solver.options().tol_energy * lhs.abs().max(1.0);
    let margin = rhs.map(|r| r - lhs);
    Ok(SubadditivityReport {
        triple: [a, b, c],
        lhs,
        rhs,
        margin,
        pass: margin.map_or(true, |m| m > tol),
    })
}

/// `system_c <= partition_value + tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub system_c: f64,
    pub partition_value: f64,
    /// `partition_value - system_c`.
    pub gap: f64,
    pub relative_gap: f64,
    pub pass: bool,
}

pub fn verify_comparison(system_c: f64, partition_value: f64, tol: f64) -> ComparisonReport {
    let gap = partition_value - system_c;
    ComparisonReport {
        system_c,
        partition_value,
        gap,
        relative_gap: gap / partition_value.abs(),
        pass: system_c <= partition_value + tol,
    }
}

/// Optimal energies for `M = 2, ..., M_max`, which must increase strictly,
/// and the one-piece energy of `(0, pi)` below all of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub whole: f64,
    /// `(M, optimal energy, cuts)` for each `M`.
    pub energies: Vec<(usize, f64, Vec<f64>)>,
    /// `E(M+1) - E(M)`, and `E(2) - whole` first.
    pub margins: Vec<f64>,
    pub pass: bool,
}

pub fn verify_monotone_in_m(
    solver: &PartitionSolver,
    max_pieces: usize,
    scan: &ScanOptions,
    min_margin: f64,
) -> Result<MonotoneReport> {
    if max_pieces < 3 {
        return Err(Error::Config(format!("M_max = {max_pieces}, at least 3 required")));
    }
    let whole = solver.interval_energy(0.0, std::f64::consts::PI)?;
    let mut energies = Vec::new();
    for m in 2..=max_pieces {
        let opt = optimize_partition(solver, m, scan)?;
        energies.push((m, opt.energy, opt.partition.cuts().to_vec()));
    }
    let mut margins = vec![energies[0].1 - whole];
    margins.extend(energies.windows(2).map(|w| w[1].1 - w[0].1));
    let pass = margins.iter().all(|m| *m > min_margin);
    Ok(MonotoneReport {
        whole,
        energies,
        margins,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_boundary_case() {
        assert!(verify_comparison(5.0, 5.0, 0.0).pass);
        assert!(!verify_comparison(5.1, 5.0, 1e-6).pass);
        assert!(verify_comparison(4.0, 5.0, 0.0).gap > 0.0);
    }
}
