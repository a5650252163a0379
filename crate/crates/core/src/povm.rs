//! Measurements, states and outcome statistics.
//!
//! The incoherent basis is always the index basis of the stored matrices. A
//! change of basis is expressed by conjugating the measurement explicitly
//! ([`Povm::conjugate_by`]).

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{conj_sandwich, normalize, GeneralMatrix, HermitianMatrix, C64};
use crate::prelude::*;

/// Round-off below this magnitude is clamped away from probabilities.
pub const PROBABILITY_CLAMP: f64 = 1e-10;

/// A finite-outcome measurement `{A_a}`.
///
/// Construction only checks shapes; positivity and completeness are checked by
/// [`Povm::validate`] or enforced by [`Povm::validated`]. This keeps noisy
/// reconstructions representable.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    components: Vec<HermitianMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// Smallest eigenvalue of each component.
    pub psd_margins: Vec<f64>,
    /// Largest entry modulus of `sum_a A_a - I`.
    pub completeness_residual: f64,
    pub tolerance: f64,
    pub valid: bool,
}

impl ValidationReport {
    /// Converts a failed report into the first violated condition.
    pub fn into_result(self) -> Result<()> {
        if let Some((index, &eigenvalue)) = self
            .psd_margins
            .iter()
            .enumerate()
            .find(|(_, &m)| m < -self.tolerance)
        {
            return Err(Error::NotPositive { index, eigenvalue });
        }
        if self.completeness_residual > self.tolerance {
            return Err(Error::Incomplete {
                residual: self.completeness_residual,
            });
        }
        Ok(())
    }
}

impl Povm {
    pub fn new(components: Vec<HermitianMatrix>) -> Result<Self> {
        let first = components.first().ok_or(Error::Empty { what: "outcome count" })?;
        let dim = first.dim();
        for c in &components {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.dim(),
                });
            }
        }
        Ok(Self { dim, components })
    }

    /// Builds and requires validity within `tol`.
    pub fn validated(components: Vec<HermitianMatrix>, tol: f64) -> Result<Self> {
        let p = Self::new(components)?;
        p.validate(tol).into_result()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[HermitianMatrix] {
        &self.components
    }

    pub fn component(&self, a: usize) -> &HermitianMatrix {
        &self.components[a]
    }

    pub fn into_components(self) -> Vec<HermitianMatrix> {
        self.components
    }

    pub fn completeness_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let s: C64 = self.components.iter().map(|c| c.get(i, j)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    pub fn validate(&self, tol: f64) -> ValidationReport {
        let psd_margins: Vec<f64> = self.components.iter().map(|c| c.eig_min()).collect();
        let completeness_residual = self.completeness_residual();
        let valid = psd_margins.iter().all(|&m| m >= -tol) && completeness_residual <= tol;
        ValidationReport {
            psd_margins,
            completeness_residual,
            tolerance: tol,
            valid,
        }
    }

    /// True iff every off-diagonal entry of every component is at most `tol`
    /// in modulus.
    pub fn is_incoherent(&self, tol: f64) -> bool {
        self.components.iter().all(|c| c.max_abs_off_diagonal() <= tol)
    }

    /// Dual of total dephasing: keeps the diagonal of each component.
    pub fn dephase(&self) -> Self {
        Self {
            dim: self.dim,
            components: self.components.iter().map(|c| c.diagonal_part()).collect(),
        }
    }

    pub fn born_distribution(&self, rho: &DensityMatrix) -> Result<OutcomeDistribution> {
        if rho.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.dim(),
            });
        }
        let mut probs = Vec::with_capacity(self.outcomes());
        for (outcome, c) in self.components.iter().enumerate() {
            let p = rho.matrix().trace_product(c)?;
            probs.push(clamp_probability(outcome, p)?);
        }
        Ok(OutcomeDistribution { probs })
    }

    /// Outcome probabilities for the pure state `psi` (no clamping).
    pub fn pure_state_probabilities(&self, psi: &[C64]) -> Vec<f64> {
        self.components.iter().map(|c| c.expectation(psi)).collect()
    }

    /// Convex combination `weight * self + (1 - weight) * other`.
    pub fn mix(&self, other: &Self, weight: f64) -> Result<Self> {
        if self.dim != other.dim || self.outcomes() != other.outcomes() {
            return Err(Error::DimensionMismatch {
                expected: self.outcomes(),
                found: other.outcomes(),
            });
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.scale(weight).add(&b.scale(1.0 - weight)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: self.dim,
            components,
        })
    }

    /// `{U^† A_a U}`: the same measurement expressed after the unitary `U`.
    pub fn conjugate_by(&self, u: &GeneralMatrix) -> Result<Self> {
        let components = self
            .components
            .iter()
            .map(|c| conj_sandwich(u, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: self.dim,
            components,
        })
    }

    /// Sums consecutive blocks of `block` outcomes into one outcome each.
    pub fn coarse_grain(&self, block: usize) -> Result<Self> {
        if block == 0 || self.outcomes() % block != 0 {
            return Err(Error::invalid(format!(
                "cannot group {} outcomes into blocks of {block}",
                self.outcomes()
            )));
        }
        let components = self
            .components
            .chunks(block)
            .map(|chunk| {
                chunk[1..]
                    .iter()
                    .try_fold(chunk[0].clone(), |acc, c| acc.add(c))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: self.dim,
            components,
        })
    }
}

fn clamp_probability(outcome: usize, p: f64) -> Result<f64> {
    if p < -PROBABILITY_CLAMP || p > 1.0 + PROBABILITY_CLAMP {
        return Err(Error::NegativeProbability { outcome, value: p });
    }
    Ok(p.clamp(0.0, 1.0))
}

/// A random valid POVM, deterministic in `seed`.
///
/// Draws complex Ginibre matrices `G_a`, sets `P_a = G_a G_a^†`,
/// `S = sum_a P_a` and returns `S^{-1/2} P_a S^{-1/2}`.
pub fn random_povm(dim: usize, outcomes: usize, seed: u64) -> Result<Povm> {
    let mut rng = crate::seed::rng(seed, &[0x706f_766d]);
    random_povm_with(dim, outcomes, &mut rng)
}

pub fn random_povm_with<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> Result<Povm> {
    if dim == 0 {
        return Err(Error::Empty { what: "dimension" });
    }
    if outcomes == 0 {
        return Err(Error::Empty { what: "outcome count" });
    }
    let raw: Vec<HermitianMatrix> = (0..outcomes).map(|_| wishart(dim, dim, rng)).collect();
    let total = raw[1..].iter().try_fold(raw[0].clone(), |acc, p| acc.add(p))?;
    let inv_sqrt = total.spectral_map(|l| 1.0 / l.max(1e-300).sqrt()).to_general();
    let components = raw
        .iter()
        .map(|p| conj_sandwich(&inv_sqrt, p))
        .collect::<Result<Vec<_>>>()?;
    Povm::new(components)
}

pub(crate) fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// `G G^†` for a `dim x rank` complex Gaussian `G`.
fn wishart<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> HermitianMatrix {
    let g: Vec<C64> = (0..dim * rank).map(|_| gaussian_c64(rng)).collect();
    HermitianMatrix::from_fn_unchecked(dim, |i, j| {
        (0..rank).map(|k| g[i * rank + k] * g[j * rank + k].conj()).sum()
    })
}

/// Uniformly random pure state (normalized complex Gaussian vector).
pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..dim).map(|_| gaussian_c64(rng)).collect();
        if let Some(v) = normalize(&v) {
            return v;
        }
    }
}

/// Unit-trace PSD matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: HermitianMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: HermitianMatrix, tol: f64) -> Result<Self> {
        let trace = matrix.trace();
        if (trace - 1.0).abs() > 1e-9 {
            return Err(Error::BadTrace { trace });
        }
        let eigenvalue = matrix.eig_min();
        if eigenvalue < -tol {
            return Err(Error::NotPositive { index: 0, eigenvalue });
        }
        Ok(Self { matrix })
    }

    /// `|psi><psi|` for a (not necessarily normalized) nonzero vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let v = normalize(psi).ok_or_else(|| Error::invalid("zero state vector"))?;
        Ok(Self {
            matrix: HermitianMatrix::projector(&v),
        })
    }

    /// Incoherent state `sum_i p_i |i><i|`.
    pub fn incoherent(probs: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::diagonal(probs), 0.0)
    }

    /// Random mixed state of random rank in `1..=dim`.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let rank = rng.random_range(1..=dim);
        let w = wishart(dim, rank, rng);
        let t = w.trace();
        Self { matrix: w.scale(1.0 / t) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    /// Total dephasing in the incoherent basis.
    pub fn dephase(&self) -> Self {
        Self {
            matrix: self.matrix.diagonal_part(),
        }
    }
}

/// Outcome probabilities `p(a) = Tr[rho A_a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(probs: Vec<f64>, tol: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Empty { what: "outcome count" });
        }
        for (outcome, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < -tol || p > 1.0 + tol {
                return Err(Error::NegativeProbability { outcome, value: p });
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::OutOfRange {
                what: "probability total",
                value: total,
                range: "1 +- 1e-9",
            });
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}
