use core::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::linalg::{HermitianMatrix, C64};
use crate::povm::{OutcomeDistribution, Povm};
use crate::prelude::*;

/// A convex divergence between outcome distributions, usable in
/// [`super::distance_monotone`].
pub trait StatisticalDistance {
    fn name(&self) -> &'static str;

    /// `D(p, q)`; may be `+inf`.
    fn value(&self, p: &[f64], q: &[f64]) -> f64;

    /// Smooth convex surrogate of `q -> D(p, q)` with
    /// `D <= surrogate <= D + smoothing_excess`. Writes the gradient in `q`.
    fn smoothed(&self, p: &[f64], q: &[f64], tau: f64, grad_q: &mut [f64]) -> f64;

    fn smoothing_excess(&self, _outcomes: usize, _tau: f64) -> f64 {
        0.0
    }

    /// Gradients of `D` in both arguments, used for ascent over states.
    fn gradients(&self, p: &[f64], q: &[f64], grad_p: &mut [f64], grad_q: &mut [f64]);

    /// `sup_rho D(p_A, p_M)` with a maximizing pure state, when available in
    /// closed form.
    fn exact_sup(&self, _a: &Povm, _m: &Povm) -> Option<(f64, Vec<C64>)> {
        None
    }
}

/// Relative entropy in bits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RelativeEntropy;

/// Total variation distance `(1/2) sum_a |p_a - q_a|`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TotalVariation;

/// `sum_a p_a log2(p_a / q_a)`; zero-probability terms vanish and a support
/// violation gives `+inf`.
pub fn relative_entropy(p: &OutcomeDistribution, q: &OutcomeDistribution) -> f64 {
    RelativeEntropy.value(p.probs(), q.probs())
}

impl StatisticalDistance for RelativeEntropy {
    fn name(&self) -> &'static str {
        "relative-entropy"
    }

    fn value(&self, p: &[f64], q: &[f64]) -> f64 {
        let mut total = 0.0;
        for (&pa, &qa) in p.iter().zip(q) {
            if pa <= 0.0 {
                continue;
            }
            if qa <= 0.0 {
                return f64::INFINITY;
            }
            total += pa * (pa / qa).log2();
        }
        total
    }

    fn smoothed(&self, p: &[f64], q: &[f64], _tau: f64, grad_q: &mut [f64]) -> f64 {
        for (g, (&pa, &qa)) in grad_q.iter_mut().zip(p.iter().zip(q)) {
            *g = if pa <= 0.0 { 0.0 } else { -pa / (qa * LN_2) };
        }
        self.value(p, q)
    }

    fn gradients(&self, p: &[f64], q: &[f64], grad_p: &mut [f64], grad_q: &mut [f64]) {
        for a in 0..p.len() {
            let pa = p[a].max(1e-16);
            let qa = q[a].max(1e-300);
            grad_p[a] = (pa / qa).log2() + 1.0 / LN_2;
            grad_q[a] = if p[a] <= 0.0 { 0.0 } else { -pa / (qa * LN_2) };
        }
    }
}

/// `ln(2 cosh(x / tau)) * tau`, computed without overflow.
fn soft_abs(x: f64, tau: f64) -> f64 {
    let ax = x.abs();
    ax + tau * (-2.0 * ax / tau).exp().ln_1p()
}

impl StatisticalDistance for TotalVariation {
    fn name(&self) -> &'static str {
        "total-variation"
    }

    fn value(&self, p: &[f64], q: &[f64]) -> f64 {
        0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }

    fn smoothed(&self, p: &[f64], q: &[f64], tau: f64, grad_q: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for a in 0..p.len() {
            let x = p[a] - q[a];
            total += 0.5 * soft_abs(x, tau);
            grad_q[a] = -0.5 * (x / tau).tanh();
        }
        total
    }

    fn smoothing_excess(&self, outcomes: usize, tau: f64) -> f64 {
        0.5 * outcomes as f64 * tau * LN_2
    }

    fn gradients(&self, p: &[f64], q: &[f64], grad_p: &mut [f64], grad_q: &mut [f64]) {
        for a in 0..p.len() {
            let s = 0.5 * (p[a] - q[a]).signum();
            grad_p[a] = s;
            grad_q[a] = -s;
        }
    }

    /// `max_s lambda_max((1/2) sum_a s_a (A_a - M_a))` over sign patterns `s`.
    fn exact_sup(&self, a: &Povm, m: &Povm) -> Option<(f64, Vec<C64>)> {
        let n = a.outcomes();
        if n > 16 {
            return None;
        }
        let diffs: Vec<HermitianMatrix> = a
            .components()
            .iter()
            .zip(m.components())
            .map(|(x, y)| x.sub(y).expect("same dim").scale(0.5))
            .collect();
        let mut best: Option<(f64, Vec<C64>)> = None;
        // s and -s give the same spectrum up to sign; fix s_0 = +1
        for mask in 0..(1usize << (n - 1)) {
            let mut acc = diffs[0].clone();
            for (idx, d) in diffs.iter().enumerate().skip(1) {
                let sign = if mask >> (idx - 1) & 1 == 1 { -1.0 } else { 1.0 };
                acc = acc.add(&d.scale(sign)).expect("same dim");
            }
            for candidate in [acc.clone(), acc.scale(-1.0)] {
                let (val, vec) = candidate.max_eigenpair();
                if best.as_ref().map_or(true, |(b, _)| val > *b) {
                    best = Some((val, vec));
                }
            }
        }
        best.map(|(v, psi)| (v.max(0.0), psi))
    }
}

/// Registered distances, selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distance {
    RelativeEntropy,
    TotalVariation,
}

impl Distance {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "relative-entropy" | "re" | "cs" => Ok(Self::RelativeEntropy),
            "total-variation" | "tv" => Ok(Self::TotalVariation),
            other => Err(Error::UnknownDistance(other.to_string())),
        }
    }

    fn inner(&self) -> &dyn StatisticalDistance {
        match self {
            Self::RelativeEntropy => &RelativeEntropy,
            Self::TotalVariation => &TotalVariation,
        }
    }
}

impl StatisticalDistance for Distance {
    fn name(&self) -> &'static str {
        self.inner().name()
    }
    fn value(&self, p: &[f64], q: &[f64]) -> f64 {
        self.inner().value(p, q)
    }
    fn smoothed(&self, p: &[f64], q: &[f64], tau: f64, grad_q: &mut [f64]) -> f64 {
        self.inner().smoothed(p, q, tau, grad_q)
    }
    fn smoothing_excess(&self, outcomes: usize, tau: f64) -> f64 {
        self.inner().smoothing_excess(outcomes, tau)
    }
    fn gradients(&self, p: &[f64], q: &[f64], grad_p: &mut [f64], grad_q: &mut [f64]) {
        self.inner().gradients(p, q, grad_p, grad_q)
    }
    fn exact_sup(&self, a: &Povm, m: &Povm) -> Option<(f64, Vec<C64>)> {
        self.inner().exact_sup(a, m)
    }
}
