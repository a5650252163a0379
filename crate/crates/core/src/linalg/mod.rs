//! Dense complex matrices for small dimensions.
//!
//! [`HermitianMatrix`] carries POVM components, density matrices and SDP
//! variables; [`GeneralMatrix`] carries Kraus operators and unitaries. Both are
//! square, row-major and immutable once built.

mod eigen;
mod solve;

pub use eigen::symmetric_eigen;
pub use solve::{condition_number, solve_real};

use crate::error::{Error, Result};
use crate::prelude::*;

pub use num_complex::Complex64 as C64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Scale-relative Hermiticity tolerance: `1e-9 * (1 + max |entry|)`.
pub fn hermiticity_tolerance(max_abs: f64) -> f64 {
    1e-9 * (1.0 + max_abs)
}

fn check_finite(dim: usize, data: &[C64]) -> Result<()> {
    if dim == 0 {
        return Err(Error::Empty { what: "dimension" });
    }
    if data.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            found: data.len(),
        });
    }
    for (idx, z) in data.iter().enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NonFinite {
                row: idx / dim,
                col: idx % dim,
            });
        }
    }
    Ok(())
}

/// Square complex matrix without symmetry requirements.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl GeneralMatrix {
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        check_finite(dim, &data)?;
        Ok(Self { dim, data })
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::new(dim, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            data: matmul_raw(self.dim, &self.data, &other.data),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        same_dim(self.dim, v.len())?;
        Ok((0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Largest entry modulus of `K^† K - I`.
    pub fn unitarity_residual(&self) -> f64 {
        let p = self.adjoint().matmul(self).expect("same dimension");
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((p.get(i, j) - target).norm());
            }
        }
        worst
    }

    /// Number of entries with modulus above `tol`.
    pub fn count_nonzero(&self, tol: f64) -> usize {
        self.data.iter().filter(|z| z.norm() > tol).count()
    }
}

impl From<&HermitianMatrix> for GeneralMatrix {
    fn from(h: &HermitianMatrix) -> Self {
        Self {
            dim: h.dim,
            data: h.data.clone(),
        }
    }
}

/// Hermitian matrix. Stored entries are exactly Hermitian: construction
/// validates the input within tolerance and keeps its Hermitian part.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl HermitianMatrix {
    /// Validates and stores the Hermitian part of `data`.
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        check_finite(dim, &data)?;
        let max_abs = data.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let tol = hermiticity_tolerance(max_abs);
        for i in 0..dim {
            for j in i..dim {
                let asymmetry = (data[i * dim + j] - data[j * dim + i].conj()).norm();
                if asymmetry > tol {
                    return Err(Error::NotHermitian {
                        row: i,
                        col: j,
                        asymmetry,
                    });
                }
            }
        }
        Ok(Self::hermitian_part_raw(dim, &data))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::new(dim, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let dim = values.len();
        Self::from_fn_unchecked(dim, |i, j| if i == j { C64::new(values[i], 0.0) } else { ZERO })
    }

    /// Rank-one `|v><v|`.
    pub fn projector(v: &[C64]) -> Self {
        Self::from_fn_unchecked(v.len(), |i, j| v[i] * v[j].conj())
    }

    /// Builds from a generator assumed Hermitian up to round-off; the result is
    /// symmetrized.
    pub(crate) fn from_fn_unchecked(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self::hermitian_part_raw(dim, &data)
    }

    fn hermitian_part_raw(dim: usize, data: &[C64]) -> Self {
        let mut out = vec![ZERO; dim * dim];
        for i in 0..dim {
            out[i * dim + i] = C64::new(data[i * dim + i].re, 0.0);
            for j in (i + 1)..dim {
                let z = (data[i * dim + j] + data[j * dim + i].conj()) * 0.5;
                out[i * dim + j] = z;
                out[j * dim + i] = z.conj();
            }
        }
        Self { dim, data: out }
    }

    /// Hermitian part `(m + m^†)/2` of a general matrix.
    pub fn hermitian_part(m: &GeneralMatrix) -> Self {
        Self::hermitian_part_raw(m.dim, &m.data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).collect()
    }

    pub fn diagonal_part(&self) -> Self {
        Self::diagonal(&self.diag())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    /// `Tr[self * other]`, real for Hermitian arguments.
    pub fn trace_product(&self, other: &Self) -> Result<f64> {
        same_dim(self.dim, other.dim)?;
        let d = self.dim;
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += (self.data[i * d + j] * other.data[j * d + i]).re;
            }
        }
        Ok(acc)
    }

    /// Matrix-vector product; `v` must have length `dim`.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let d = self.dim;
        (0..d).map(|i| (0..d).map(|j| self.data[i * d + j] * v[j]).sum()).collect()
    }

    /// `<v| self |v>`.
    pub fn expectation(&self, v: &[C64]) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for i in 0..d {
            let row: C64 = (0..d).map(|j| self.data[i * d + j] * v[j]).sum();
            acc += (v[i].conj() * row).re;
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_off_diagonal(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    worst = worst.max(self.data[i * d + j].norm());
                }
            }
        }
        worst
    }

    fn embedded(&self) -> Vec<f64> {
        let d = self.dim;
        let n = 2 * d;
        let mut e = vec![0.0; n * n];
        for i in 0..d {
            for j in 0..d {
                let z = self.data[i * d + j];
                e[i * n + j] = z.re;
                e[(i + d) * n + (j + d)] = z.re;
                e[(i + d) * n + j] = z.im;
                e[i * n + (j + d)] = -z.im;
            }
        }
        e
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let (vals, _) = symmetric_eigen(&self.embedded(), 2 * self.dim);
        vals.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect()
    }

    pub fn eig_min(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Largest eigenvalue and a unit eigenvector for it.
    pub fn max_eigenpair(&self) -> (f64, Vec<C64>) {
        let d = self.dim;
        let n = 2 * d;
        let (vals, vecs) = symmetric_eigen(&self.embedded(), n);
        // (u; v) eigenvector of the embedding <=> u + i v eigenvector of self
        let top = n - 1;
        let v: Vec<C64> = (0..d).map(|r| C64::new(vecs[r * n + top], vecs[(r + d) * n + top])).collect();
        (vals[top], normalize(&v).expect("unit eigenvector"))
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.eig_min() >= -tol
    }

    /// Applies a real function to the spectrum: `sum_k f(l_k) |v_k><v_k|`.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> Self {
        let d = self.dim;
        let n = 2 * d;
        let (vals, vecs) = symmetric_eigen(&self.embedded(), n);
        let weights: Vec<f64> = vals.iter().map(|&l| f(l)).collect();
        let block = |r: usize, c: usize| -> f64 {
            (0..n).map(|k| weights[k] * vecs[r * n + k] * vecs[c * n + k]).sum()
        };
        Self::from_fn_unchecked(d, |i, j| {
            let re = 0.5 * (block(i, j) + block(i + d, j + d));
            let im = 0.5 * (block(i + d, j) - block(i, j + d));
            C64::new(re, im)
        })
    }

    /// Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped).
    pub fn psd_part(&self) -> Self {
        self.spectral_map(|l| l.max(0.0))
    }

    pub fn to_general(&self) -> GeneralMatrix {
        GeneralMatrix::from(self)
    }
}

fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn matmul_raw(d: usize, a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            if aik == ZERO {
                continue;
            }
            for j in 0..d {
                out[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    out
}

/// Smallest eigenvalue, rejecting inputs that are not Hermitian within
/// tolerance.
pub fn eig_min(m: &GeneralMatrix) -> Result<f64> {
    Ok(HermitianMatrix::new(m.dim, m.data.clone())?.eig_min())
}

/// `K^† m K`, returned as an exactly Hermitian matrix.
pub fn conj_sandwich(k: &GeneralMatrix, m: &HermitianMatrix) -> Result<HermitianMatrix> {
    same_dim(m.dim, k.dim)?;
    let d = m.dim;
    let mk = matmul_raw(d, &m.data, &k.data);
    let mut out = vec![ZERO; d * d];
    for i in 0..d {
        for l in 0..d {
            let kli = k.data[l * d + i].conj();
            if kli == ZERO {
                continue;
            }
            for j in 0..d {
                out[i * d + j] += kli * mk[l * d + j];
            }
        }
    }
    Ok(HermitianMatrix::hermitian_part_raw(d, &out))
}

/// Normalizes a complex vector; returns `None` for the zero vector.
pub fn normalize(v: &[C64]) -> Option<Vec<C64>> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    Some(v.iter().map(|z| z / norm).collect())
}
