//! Tridiagonal solvers for the 1D operators.

use std::ops::Range;

use crate::discretization::OrbitGrid;

/// The energy operator `A` (stiffness plus `a_N/4` times mass) restricted to
/// the node range `free`, plus `extra[j]` on the diagonal for node `j`. Nodes
/// outside `free` are held at zero.
pub(crate) fn energy_operator(grid: &OrbitGrid, free: Range<usize>, extra: Option<&[f64]>) -> Tridiagonal {
    let a4 = grid.cfg().a_n() / 4.0;
    let mass = grid.measure_weights();
    let last_cell = grid.cells();
    let diag = free
        .clone()
        .map(|j| {
            let mut d = a4 * mass[j];
            if j > 0 {
                d += grid.cell_stiffness(j - 1);
            }
            if j < last_cell {
                d += grid.cell_stiffness(j);
            }
            if let Some(e) = extra {
                d += e[j];
            }
            d
        })
        .collect();
    let off: Vec<f64> = free
        .clone()
        .skip(1)
        .map(|j| -grid.cell_stiffness(j - 1))
        .collect();
    Tridiagonal {
        lower: off.clone(),
        diag,
        upper: off,
    }
}

/// A tridiagonal matrix: `lower[i]` couples row `i + 1` to column `i`,
/// `upper[i]` couples row `i` to column `i + 1`.
#[derive(Debug, Clone)]
pub(crate) struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    /// Thomas algorithm without pivoting; fine for diagonally dominant systems.
    pub fn solve_dominant(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        if n == 0 {
            return Some(Vec::new());
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        if denom == 0.0 {
            return None;
        }
        c[0] = if n > 1 { self.upper[0] / denom } else { 0.0 };
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.lower[i - 1] * c[i - 1];
            if denom == 0.0 || !denom.is_finite() {
                return None;
            }
            if i < n - 1 {
                c[i] = self.upper[i] / denom;
            }
            d[i] = (rhs[i] - self.lower[i - 1] * d[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Some(d)
    }

    /// Gaussian elimination with partial pivoting (indefinite systems).
    pub fn solve_pivoted(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        if n == 0 {
            return Some(Vec::new());
        }
        // Row i holds (dl, d, du, du2) after elimination, as in LAPACK gtsv.
        let mut dl = self.lower.clone();
        let mut d = self.diag.clone();
        let mut du = self.upper.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut b = rhs.to_vec();
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    return None;
                }
                let f = dl[i] / d[i];
                d[i + 1] -= f * du[i];
                b[i + 1] -= f * b[i];
                if i < n - 2 {
                    dl[i] = 0.0;
                }
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                let tmp = d[i + 1];
                d[i + 1] = du[i] - f * tmp;
                du[i] = tmp;
                if i < n - 2 {
                    dl[i] = du[i + 1];
                    du[i + 1] = -f * dl[i];
                    du2[i] = dl[i];
                }
                b.swap(i, i + 1);
                b[i + 1] -= f * b[i];
            }
        }
        if d[n - 1] == 0.0 {
            return None;
        }
        b[n - 1] /= d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
        }
        if b.iter().all(|x| x.is_finite()) {
            Some(b)
        } else {
            None
        }
    }

    #[cfg(test)]
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }
}

/// Dense Gaussian elimination with partial pivoting, for the small systems
/// of the Nehari projection.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[piv][k] == 0.0 {
            return None;
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
