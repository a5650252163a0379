//! Coherence monotones of measurements.
//!
//! The closed forms are read off the matrix `Ω(A)_ij = sum_a |<i|A_a|j>|`:
//! `C_linf` is its largest off-diagonal entry and `C_l1` the sum of all
//! off-diagonal entries. Distance-based monotones
//! `min_M sup_rho D(p_A, p_M)` over incoherent `M` are estimated by
//! [`distance_monotone`], which returns a bracket.

mod bracket;
mod divergence;

pub use bracket::{c_s_estimate, distance_monotone, pure_state_sup, BracketConfig, CoherenceBracket, CsEstimate};
pub use divergence::{relative_entropy, Distance, RelativeEntropy, StatisticalDistance, TotalVariation};

use crate::povm::Povm;
use crate::prelude::*;

/// `Ω(A)`: symmetric, nonnegative, unit diagonal for a valid measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl OmegaMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

pub fn omega(p: &Povm) -> OmegaMatrix {
    let d = p.dim();
    let mut entries = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            entries[i * d + j] = p.components().iter().map(|c| c.get(i, j).norm()).sum();
        }
    }
    OmegaMatrix { dim: d, entries }
}

/// Value of `C_linf` and the pair `(i, j)`, `i < j`, attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinfCoherence {
    pub value: f64,
    /// `None` only for one-dimensional systems.
    pub pair: Option<(usize, usize)>,
}

/// `max_{i<j} sum_a |<i|A_a|j>|`, ties resolved to the lexicographically
/// smallest pair.
pub fn c_linf(p: &Povm) -> LinfCoherence {
    let om = omega(p);
    let d = om.dim;
    let mut best = LinfCoherence { value: 0.0, pair: None };
    for i in 0..d {
        for j in (i + 1)..d {
            let v = om.get(i, j);
            if best.pair.is_none() || v > best.value {
                best = LinfCoherence {
                    value: v,
                    pair: Some((i, j)),
                };
            }
        }
    }
    best
}

/// `sum_a sum_{i != j} |<i|A_a|j>|`. Not monotone under SIO duals; half of it
/// bounds the robustness from above.
pub fn c_l1(p: &Povm) -> f64 {
    let om = omega(p);
    let d = om.dim;
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                total += om.get(i, j);
            }
        }
    }
    total
}
