//! Kraus channels and their dual action on measurements.
//!
//! A channel `{K_mu}` acts on a measurement as `A_a -> sum_mu K_mu^† A_a K_mu`
//! (nonselective) or expands it to `{K_mu^† A_a K_mu}` (selective). Strictly
//! incoherent operations (SIO) are recognised structurally: every Kraus
//! operator is a permutation times a diagonal.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{conj_sandwich, GeneralMatrix, HermitianMatrix, C64, ZERO};
use crate::povm::{DensityMatrix, Povm};
use crate::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    operators: Vec<GeneralMatrix>,
}

impl KrausChannel {
    /// Requires `sum_mu K_mu^† K_mu = I` within `tol`.
    pub fn new(operators: Vec<GeneralMatrix>, tol: f64) -> Result<Self> {
        let first = operators.first().ok_or(Error::Empty { what: "Kraus operator count" })?;
        let dim = first.dim();
        for k in &operators {
            if k.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: k.dim(),
                });
            }
        }
        let channel = Self { dim, operators };
        let residual = channel.completeness_residual();
        if residual > tol {
            return Err(Error::Incomplete { residual });
        }
        Ok(channel)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn operators(&self) -> &[GeneralMatrix] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn completeness_residual(&self) -> f64 {
        let identity = HermitianMatrix::identity(self.dim);
        let mut total = HermitianMatrix::zeros(self.dim);
        for k in &self.operators {
            total = total
                .add(&conj_sandwich(k, &identity).expect("dims checked"))
                .expect("dims checked");
        }
        total.sub(&identity).expect("dims checked").max_abs()
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            operators: vec![GeneralMatrix::identity(dim)],
        }
    }

    /// Total dephasing `{|i><i|}_i`.
    pub fn dephasing(dim: usize) -> Self {
        let operators = (0..dim)
            .map(|m| GeneralMatrix::from_fn(dim, |i, j| if i == m && j == m { C64::new(1.0, 0.0) } else { ZERO }))
            .collect();
        Self { dim, operators }
    }

    /// `d`-level amplitude damping with rate `gamma`:
    /// `K_mu = sum_{i >= mu} sqrt(C(i, mu) (1-gamma)^(i-mu) gamma^mu) |i-mu><i|`.
    pub fn amplitude_damping(dim: usize, gamma: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty { what: "dimension" });
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::OutOfRange {
                what: "damping rate",
                value: gamma,
                range: "[0, 1]",
            });
        }
        let operators = (0..dim)
            .map(|mu| {
                GeneralMatrix::from_fn(dim, |row, col| {
                    if col >= mu && row == col - mu {
                        let w = binomial(col, mu) * (1.0 - gamma).powi((col - mu) as i32) * gamma.powi(mu as i32);
                        C64::new(w.sqrt(), 0.0)
                    } else {
                        ZERO
                    }
                })
            })
            .collect();
        Ok(Self { dim, operators })
    }

    /// Random SIO with `count` Kraus operators: random permutations, random
    /// conditional probabilities `p(mu|i)` and random phases.
    pub fn random_sio<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Self {
        let mut weights = vec![vec![0.0; dim]; count];
        for i in 0..dim {
            let raw: Vec<f64> = (0..count).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let total: f64 = raw.iter().sum();
            for mu in 0..count {
                weights[mu][i] = raw[mu] / total;
            }
        }
        let operators = weights
            .iter()
            .map(|w| {
                let mut perm: Vec<usize> = (0..dim).collect();
                perm.shuffle(rng);
                let phases: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * core::f64::consts::TAU).collect();
                GeneralMatrix::from_fn(dim, |row, col| {
                    if perm[col] == row {
                        C64::from_polar(w[col].sqrt(), phases[col])
                    } else {
                        ZERO
                    }
                })
            })
            .collect();
        Self { dim, operators }
    }

    /// Detects the SIO form `K_mu = sum_i c_{mu,i} |pi_mu(i)><i|`.
    ///
    /// Every column may hold at most one entry above `tol` and distinct
    /// nonzero columns must land in distinct rows. Zero columns get the
    /// smallest unused targets.
    pub fn classify_sio(&self, tol: f64) -> Option<SioDecomposition> {
        let d = self.dim;
        let mut permutations = Vec::with_capacity(self.len());
        let mut coefficients = Vec::with_capacity(self.len());
        for k in &self.operators {
            let mut target = vec![None; d];
            let mut coeff = vec![ZERO; d];
            let mut used = vec![false; d];
            for col in 0..d {
                let mut hit = None;
                for row in 0..d {
                    if k.get(row, col).norm() > tol {
                        if hit.is_some() {
                            return None;
                        }
                        hit = Some(row);
                    }
                }
                if let Some(row) = hit {
                    if used[row] {
                        return None;
                    }
                    used[row] = true;
                    target[col] = Some(row);
                    coeff[col] = k.get(row, col);
                }
            }
            let mut free = (0..d).filter(|&r| !used[r]);
            let perm = target
                .into_iter()
                .map(|t| t.unwrap_or_else(|| free.next().expect("counts match")))
                .collect();
            permutations.push(perm);
            coefficients.push(coeff);
        }
        Some(SioDecomposition {
            permutations,
            coefficients,
        })
    }

    pub fn dual_apply_nonselective(&self, p: &Povm) -> Result<Povm> {
        self.check_dim(p.dim())?;
        let components = p
            .components()
            .iter()
            .map(|a| {
                self.operators.iter().try_fold(HermitianMatrix::zeros(self.dim), |acc, k| {
                    acc.add(&conj_sandwich(k, a)?)
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Povm::new(components)
    }

    /// Expanded measurement `{K_mu^† A_a K_mu}` with `n * n_E` outcomes in
    /// `a`-major, `mu`-minor order (see [`selective_labels`]).
    pub fn dual_apply_selective(&self, p: &Povm) -> Result<Povm> {
        self.check_dim(p.dim())?;
        let mut components = Vec::with_capacity(p.outcomes() * self.len());
        for a in p.components() {
            for k in &self.operators {
                components.push(conj_sandwich(k, a)?);
            }
        }
        Povm::new(components)
    }

    /// Schrödinger-picture action on a state.
    pub fn apply_to_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.check_dim(rho.dim())?;
        let mut out = HermitianMatrix::zeros(self.dim);
        for k in &self.operators {
            out = out.add(&conj_sandwich(&k.adjoint(), rho.matrix())?)?;
        }
        DensityMatrix::new(out, 1e-9)
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: dim,
            });
        }
        Ok(())
    }
}

/// Outcome labels `"a:mu"` of a selective expansion, in output order.
pub fn selective_labels(outcomes: usize, operators: usize) -> Vec<String> {
    let mut labels = Vec::with_capacity(outcomes * operators);
    for a in 0..outcomes {
        for mu in 0..operators {
            labels.push(format!("{a}:{mu}"));
        }
    }
    labels
}

/// Permutation-times-diagonal structure of an SIO channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SioDecomposition {
    /// `permutations[mu][i] = pi_mu(i)`.
    pub permutations: Vec<Vec<usize>>,
    /// `coefficients[mu][i] = c_{mu,i}`.
    pub coefficients: Vec<Vec<C64>>,
}

impl SioDecomposition {
    pub fn reconstruct(&self) -> Vec<GeneralMatrix> {
        self.permutations
            .iter()
            .zip(&self.coefficients)
            .map(|(perm, coeff)| {
                let d = perm.len();
                GeneralMatrix::from_fn(d, |row, col| if perm[col] == row { coeff[col] } else { ZERO })
            })
            .collect()
    }

    /// Largest deviation of `sum_mu |c_{mu,i}|^2` from 1.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.coefficients.first().map_or(0, |c| c.len());
        (0..d)
            .map(|i| (self.coefficients.iter().map(|c| c[i].norm_sqr()).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}
