//! Dense real linear systems.

use crate::prelude::*;

/// Solves `a x = b` for a square row-major `a` by Gaussian elimination with
/// partial pivoting. Returns `None` when a pivot vanishes.
pub fn solve_real(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))?;
        if m[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
            }
            x.swap(pivot, col);
        }
        let diag = m[col * n + col];
        for row in (col + 1)..n {
            let f = m[row * n + col] / diag;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[row * n + k] -= f * m[col * n + k];
            }
            x[row] -= f * x[col];
        }
    }
    for row in (0..n).rev() {
        let mut acc = x[row];
        for k in (row + 1)..n {
            acc -= m[row * n + k] * x[k];
        }
        x[row] = acc / m[row * n + row];
    }
    Some(x)
}

/// Spectral condition number of a square real matrix together with the right
/// singular vector of its smallest singular value.
pub fn condition_number(a: &[f64], n: usize) -> (f64, Vec<f64>) {
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            gram[i * n + j] = (0..n).map(|k| a[k * n + i] * a[k * n + j]).sum();
        }
    }
    let (vals, vecs) = super::eigen::symmetric_eigen(&gram, n);
    let weakest = (0..n).map(|r| vecs[r * n]).collect();
    let lo = vals[0].max(0.0);
    let hi = vals[n - 1];
    let cond = if lo <= 0.0 { f64::INFINITY } else { (hi / lo).sqrt() };
    (cond, weakest)
}
