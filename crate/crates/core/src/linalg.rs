//! Small dense and banded linear solvers used by the PDE and algebraic solvers.

use crate::error::{HjbError, Result};

/// Solves a tridiagonal system with the Thomas algorithm.
///
/// `lower[i]` couples row `i` to column `i - 1` (`lower[0]` is ignored),
/// `upper[i]` couples row `i` to column `i + 1` (last entry ignored).
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(HjbError::InvalidArgument("tridiagonal band lengths differ".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(HjbError::Singular("zero pivot in tridiagonal solve at row 0".into()));
    }
    c_prime[0] = upper[0] / pivot;
    d_prime[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c_prime[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(HjbError::Singular(format!("zero pivot in tridiagonal solve at row {i}")));
        }
        c_prime[i] = if i + 1 < n { upper[i] / pivot } else { 0.0 };
        d_prime[i] = (rhs[i] - lower[i] * d_prime[i - 1]) / pivot;
    }
    let mut x = d_prime;
    for i in (0..n - 1).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
    Ok(x)
}

/// Gaussian elimination with partial pivoting on a dense row-major matrix.
pub fn solve_dense(matrix: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
        return Err(HjbError::InvalidArgument("dense system must be square and match the rhs".into()));
    }
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut b = rhs.to_vec();
    let scale = a.iter().flat_map(|row| row.iter()).fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let pivot_row = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap_or(col);
        if a[pivot_row][col].abs() <= 1e-14 * scale {
            return Err(HjbError::Singular(format!("pivot {col} vanishes")));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

/// Cholesky factor of a symmetric positive definite band matrix.
///
/// Storage is lower band: `band[i * (bw + 1) + (bw - (i - j))]` holds entry
/// `(i, j)` for `i - bw <= j <= i`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    factor: Vec<f64>,
}

impl BandCholesky {
    /// Factorises the matrix whose lower-band entries are produced by `entry(i, j)`
    /// for `j <= i`, `i - j <= bw`.
    pub fn factor<F>(n: usize, bw: usize, entry: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> f64,
    {
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut sum = entry(i, j);
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    sum -= l[i * w + (bw - (i - k))] * l[j * w + (bw - (j - k))];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(HjbError::Singular(format!("band matrix not positive definite at row {i}")));
                    }
                    l[i * w + bw] = sum.sqrt();
                } else {
                    l[i * w + (bw - (i - j))] = sum / l[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, factor: l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(HjbError::InvalidArgument(format!(
                "rhs has length {} but the factor has dimension {}",
                rhs.len(),
                self.n
            )));
        }
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let l = &self.factor;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut sum = y[i];
            for k in i.saturating_sub(bw)..i {
                sum -= l[i * w + (bw - (i - k))] * y[k];
            }
            y[i] = sum / l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in i + 1..(i + bw + 1).min(n) {
                sum -= l[k * w + (bw - (k - i))] * y[k];
            }
            y[i] = sum / l[i * w + bw];
        }
        Ok(y)
    }
}
