//! Cutting-plane bracket for `min_M sup_rho D(p_A(rho), p_M(rho))`.
//!
//! The incoherent measurement is parameterized by `alpha[i][a] = <i|M_a|i>`,
//! one probability simplex per basis index. A finite set of pure states is
//! grown adaptively:
//!
//! * lower: `min_alpha max_{k in set} D_k(alpha)`, bounded from below by a
//!   Frank-Wolfe certificate on the softmax-weighted average of the `D_k`;
//! * upper: multi-start ascent over pure states at the current `alpha`; the
//!   best state found joins the set.

use super::divergence::StatisticalDistance;
use super::divergence::RelativeEntropy;
use crate::error::Result;
use crate::linalg::{normalize, HermitianMatrix, C64};
use crate::povm::{random_pure_state, DensityMatrix, Povm};
use crate::prelude::*;
use crate::seed;
use crate::tomography::probe_state;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketConfig {
    /// Stop once `upper - lower` is at most this.
    pub gap_tol: f64,
    pub max_iterations: usize,
    /// Random starts per ascent round (warm starts are added on top).
    pub starts: usize,
    pub seed: u64,
    /// Frank-Wolfe gap target of the inner minimization.
    pub inner_tol: f64,
}

impl Default for BracketConfig {
    fn default() -> Self {
        Self {
            gap_tol: 1e-3,
            max_iterations: 200,
            starts: 16,
            seed: 0,
            inner_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceBracket {
    pub lower: f64,
    pub upper: f64,
    /// State attaining `upper` against `witness_incoherent_povm`.
    pub witness_state: DensityMatrix,
    pub witness_incoherent_povm: Povm,
    pub iterations: usize,
    pub converged: bool,
}

pub type CsEstimate = CoherenceBracket;

/// Relative-entropy monotone in bits.
pub fn c_s_estimate(p: &Povm, config: &BracketConfig) -> Result<CsEstimate> {
    distance_monotone(p, &RelativeEntropy, config)
}

/// `sup` over pure states of `D(p_A, p_M)`, with a maximizer. Uses the
/// distance's closed form when it has one, multi-start ascent otherwise.
pub fn pure_state_sup<D: StatisticalDistance + ?Sized>(
    a: &Povm,
    m: &Povm,
    distance: &D,
    config: &BracketConfig,
) -> Result<(f64, Vec<C64>)> {
    if a.dim() != m.dim() || a.outcomes() != m.outcomes() {
        return Err(crate::Error::DimensionMismatch {
            expected: a.outcomes(),
            found: m.outcomes(),
        });
    }
    if let Some(found) = distance.exact_sup(a, m) {
        return Ok(found);
    }
    let mut rng = seed::rng(config.seed, &[0x5u64]);
    let mut best = (f64::NEG_INFINITY, vec![]);
    for s in 0..config.starts.max(1) + a.dim() {
        let start = if s < a.dim() {
            basis_vector(a.dim(), s)
        } else {
            random_pure_state(a.dim(), &mut rng)
        };
        let (v, psi) = ascend(distance, a.components(), m.components(), start);
        if v > best.0 {
            best = (v, psi);
        }
    }
    Ok(best)
}

fn basis_vector(d: usize, k: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); d];
    v[k] = C64::new(1.0, 0.0);
    v
}

struct CutState {
    psi: Vec<C64>,
    /// `p_A` at this state.
    p: Vec<f64>,
    /// `|psi_i|^2`.
    weights: Vec<f64>,
}

impl CutState {
    fn new(a: &Povm, psi: Vec<C64>) -> Self {
        let p = a
            .components()
            .iter()
            .map(|c| c.expectation(&psi).clamp(0.0, 1.0))
            .collect();
        let weights = psi.iter().map(|z| z.norm_sqr()).collect();
        Self { psi, p, weights }
    }

    fn q(&self, alpha: &[f64], n: usize) -> Vec<f64> {
        let mut q = vec![0.0; n];
        for (i, w) in self.weights.iter().enumerate() {
            for (a, qa) in q.iter_mut().enumerate() {
                *qa += w * alpha[i * n + a];
            }
        }
        q
    }
}

/// Smoothed max over the cut set and its pieces.
struct Surrogate {
    /// `tau ln sum_k exp(D~_k / tau)`.
    value: f64,
    /// `sum_k w_k D~_k` with softmax weights `w`.
    average: f64,
    grad: Vec<f64>,
}

fn surrogate<D: StatisticalDistance + ?Sized>(
    distance: &D,
    cuts: &[CutState],
    alpha: &[f64],
    n: usize,
    tau: f64,
) -> Surrogate {
    let d = cuts[0].weights.len();
    let mut vals = Vec::with_capacity(cuts.len());
    let mut grads = Vec::with_capacity(cuts.len());
    for cut in cuts {
        let q = cut.q(alpha, n);
        let mut gq = vec![0.0; n];
        let v = distance.smoothed(&cut.p, &q, tau, &mut gq);
        vals.push(v);
        grads.push(gq);
    }
    let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Surrogate {
            value: f64::INFINITY,
            average: f64::INFINITY,
            grad: vec![0.0; d * n],
        };
    }
    let expo: Vec<f64> = vals.iter().map(|v| ((v - top) / tau).exp()).collect();
    let z: f64 = expo.iter().sum();
    let mut grad = vec![0.0; d * n];
    let mut average = 0.0;
    for (k, cut) in cuts.iter().enumerate() {
        let w = expo[k] / z;
        average += w * vals[k];
        for i in 0..d {
            let wi = w * cut.weights[i];
            if wi == 0.0 {
                continue;
            }
            for a in 0..n {
                grad[i * n + a] += wi * grads[k][a];
            }
        }
    }
    Surrogate {
        value: top + tau * z.ln(),
        average,
        grad,
    }
}

/// Euclidean projection of `v` onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        acc += uj;
        let t = (acc - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// `alpha_row * exp(-eta g_row)`, renormalized per row. Entries are kept
/// strictly positive so later steps can grow them again.
fn entropic_step(alpha: &[f64], grad: &[f64], n: usize, eta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(alpha.len());
    for (x, g) in alpha.chunks(n).zip(grad.chunks(n)) {
        let logs: Vec<f64> = x.iter().zip(g).map(|(a, b)| a.ln() - eta * b).collect();
        let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logs.iter().map(|l| (l - top).exp().max(MIN_WEIGHT)).collect();
        let z: f64 = e.iter().sum();
        out.extend(e.iter().map(|v| v / z));
    }
    out
}

/// Frank-Wolfe gap over the product of simplices.
fn fw_gap(alpha: &[f64], grad: &[f64], n: usize) -> f64 {
    alpha
        .chunks(n)
        .zip(grad.chunks(n))
        .map(|(x, g)| {
            let inner: f64 = x.iter().zip(g).map(|(a, b)| a * b).sum();
            inner - g.iter().cloned().fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Projected gradient on the smoothed max with continuation in `tau`.
/// Returns a certified lower bound on `min_alpha max_k D_k(alpha)`.
fn minimize_over_incoherent<D: StatisticalDistance + ?Sized>(
    distance: &D,
    cuts: &[CutState],
    alpha: &mut Vec<f64>,
    n: usize,
    config: &BracketConfig,
    tau_start: f64,
) -> f64 {
    let ln_k = (cuts.len() as f64).ln().max(LN_MIN);
    let tau_min = 0.05 * config.gap_tol / ln_k;
    let mut tau = tau_start.min(0.05).max(tau_min);
    let mut lower = 0.0f64;
    let mut step = 1.0;
    loop {
        let last = tau <= tau_min;
        let target = if last {
            config.inner_tol.max(0.05 * config.gap_tol)
        } else {
            0.05 * config.gap_tol
        };
        let mut cur = surrogate(distance, cuts, alpha, n, tau);
        for _ in 0..INNER_ITERATIONS {
            let gap = fw_gap(alpha, &cur.grad, n);
            if gap.is_finite() {
                let excess = distance.smoothing_excess(n, tau);
                lower = lower.max(cur.average - gap - excess);
            }
            if gap <= target {
                break;
            }
            // exponentiated-gradient step, backtracking on the KL upper model
            let mut accepted = false;
            while step > 1e-18 {
                let trial = entropic_step(alpha, &cur.grad, n, step);
                let next = surrogate(distance, cuts, &trial, n, tau);
                let mut model = cur.value;
                let mut kl = 0.0;
                for ((t, x), g) in trial.iter().zip(alpha.iter()).zip(&cur.grad) {
                    model += g * (t - x);
                    if *t > 0.0 {
                        kl += t * (t / x).ln();
                    }
                }
                model += kl / step;
                if next.value.is_finite() && next.value <= model + 1e-15 {
                    *alpha = trial;
                    cur = next;
                    accepted = true;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if last {
            break;
        }
        tau = (tau * 0.2).max(tau_min);
    }
    lower.max(0.0)
}

const MIN_WEIGHT: f64 = 1e-300;
const LN_MIN: f64 = 0.693_147_180_559_945_3;
const INNER_ITERATIONS: usize = 4000;
const ASCENT_ITERATIONS: usize = 400;

/// Value of `D(p_A(psi), p_M(psi))` for diagonal `M`.
fn state_value<D: StatisticalDistance + ?Sized>(
    distance: &D,
    a: &[HermitianMatrix],
    m: &[HermitianMatrix],
    psi: &[C64],
) -> f64 {
    let p: Vec<f64> = a.iter().map(|c| c.expectation(psi).clamp(0.0, 1.0)).collect();
    let q: Vec<f64> = m.iter().map(|c| c.expectation(psi).clamp(0.0, 1.0)).collect();
    distance.value(&p, &q)
}

/// Riemannian gradient ascent on the unit sphere with normalization retraction.
fn ascend<D: StatisticalDistance + ?Sized>(
    distance: &D,
    a: &[HermitianMatrix],
    m: &[HermitianMatrix],
    start: Vec<C64>,
) -> (f64, Vec<C64>) {
    let n = a.len();
    let mut psi = start;
    let mut value = state_value(distance, a, m, &psi);
    let mut step = 0.5;
    for _ in 0..ASCENT_ITERATIONS {
        if !value.is_finite() {
            break;
        }
        let p: Vec<f64> = a.iter().map(|c| c.expectation(&psi).clamp(0.0, 1.0)).collect();
        let q: Vec<f64> = m.iter().map(|c| c.expectation(&psi).clamp(0.0, 1.0)).collect();
        let mut gp = vec![0.0; n];
        let mut gq = vec![0.0; n];
        distance.gradients(&p, &q, &mut gp, &mut gq);
        let mut g = vec![C64::new(0.0, 0.0); psi.len()];
        for k in 0..n {
            for (gi, (x, y)) in g.iter_mut().zip(a[k].apply(&psi).into_iter().zip(m[k].apply(&psi))) {
                *gi += (x * gp[k] + y * gq[k]) * 2.0;
            }
        }
        let radial: f64 = psi.iter().zip(&g).map(|(x, y)| (x.conj() * y).re).sum();
        for (gi, x) in g.iter_mut().zip(&psi) {
            *gi -= x * radial;
        }
        let gnorm2: f64 = g.iter().map(|z| z.norm_sqr()).sum();
        if gnorm2 < 1e-24 {
            break;
        }
        let mut moved = false;
        while step > 1e-14 {
            let trial: Vec<C64> = psi.iter().zip(&g).map(|(x, y)| x + y * step).collect();
            let trial = match normalize(&trial) {
                Some(t) => t,
                None => break,
            };
            let v = state_value(distance, a, m, &trial);
            if v >= value + 1e-4 * step * gnorm2 {
                let gain = v - value;
                psi = trial;
                value = v;
                moved = true;
                step *= 2.0;
                if gain < 1e-14 {
                    return (value, psi);
                }
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (value, psi)
}

fn incoherent_povm(alpha: &[f64], d: usize, n: usize) -> Result<Povm> {
    Povm::new(
        (0..n)
            .map(|a| HermitianMatrix::diagonal(&(0..d).map(|i| alpha[i * n + a]).collect::<Vec<_>>()))
            .collect(),
    )
}

fn fidelity(x: &[C64], y: &[C64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()
}

/// Bracket on `min_{M incoherent} sup_rho D(p_A, p_M)`. Incoherent inputs
/// return `[0, 0]` immediately.
pub fn distance_monotone<D: StatisticalDistance + ?Sized>(
    p: &Povm,
    distance: &D,
    config: &BracketConfig,
) -> Result<CoherenceBracket> {
    let d = p.dim();
    let n = p.outcomes();
    if p.is_incoherent(1e-12) {
        return Ok(CoherenceBracket {
            lower: 0.0,
            upper: 0.0,
            witness_state: DensityMatrix::pure(&basis_vector(d, 0))?,
            witness_incoherent_povm: p.dephase(),
            iterations: 0,
            converged: true,
        });
    }
    let mut alpha = vec![0.0; d * n];
    for (a, c) in p.components().iter().enumerate() {
        for (i, v) in c.diag().into_iter().enumerate() {
            alpha[i * n + a] = v.max(0.0);
        }
    }
    for row in alpha.chunks_mut(n) {
        project_simplex(row);
        for x in row.iter_mut() {
            *x = (1.0 - 1e-3) * *x + 1e-3 / n as f64;
        }
    }

    let mut cuts: Vec<CutState> = Vec::new();
    for k in 0..d {
        for l in 0..d {
            cuts.push(CutState::new(p, probe_state(d, k, l)));
        }
    }

    let mut rng = seed::rng(config.seed, &[0xc5u64]);
    let mut lower = 0.0f64;
    let mut upper = f64::INFINITY;
    let mut best_alpha = alpha.clone();
    let mut witness = basis_vector(d, 0);
    let mut warm: Vec<Vec<C64>> = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iterations {
        iterations += 1;
        // once the bracket is narrow, coarse smoothing levels only waste work
        let tau_start = if upper.is_finite() { 0.1 * (upper - lower) } else { 0.05 };
        lower = lower.max(minimize_over_incoherent(distance, &cuts, &mut alpha, n, config, tau_start));

        let m = incoherent_povm(&alpha, d, n)?;
        let mut found: Vec<(f64, Vec<C64>)> = Vec::new();
        if let Some(exact) = distance.exact_sup(p, &m) {
            found.push(exact);
        } else {
            let mut starts: Vec<Vec<C64>> = warm.clone();
            for _ in 0..config.starts {
                starts.push(random_pure_state(d, &mut rng));
            }
            for start in starts {
                found.push(ascend(distance, p.components(), m.components(), start));
            }
        }
        for cut in &cuts {
            let v = state_value(distance, p.components(), m.components(), &cut.psi);
            found.push((v, cut.psi.clone()));
        }
        found.sort_by(|x, y| y.0.total_cmp(&x.0));
        let (top, top_psi) = found[0].clone();
        if top < upper {
            upper = top;
            best_alpha = alpha.clone();
            witness = top_psi;
        }
        // the set grew since the best alpha was found; keep upper honest
        let best_m = incoherent_povm(&best_alpha, d, n)?;
        for cut in &cuts {
            let v = state_value(distance, p.components(), best_m.components(), &cut.psi);
            if v > upper {
                upper = v;
                witness = cut.psi.clone();
            }
        }
        if upper - lower <= config.gap_tol {
            converged = true;
            break;
        }

        let mut added = 0;
        warm.clear();
        for (v, psi) in &found {
            if added == 2 || *v <= lower {
                break;
            }
            if cuts.iter().any(|c| fidelity(&c.psi, psi) > 1.0 - 1e-9) {
                continue;
            }
            cuts.push(CutState::new(p, psi.clone()));
            warm.push(psi.clone());
            added += 1;
        }
        if added == 0 {
            // ascent found nothing new; a random cut keeps the set growing
            cuts.push(CutState::new(p, random_pure_state(d, &mut rng)));
        }
    }

    Ok(CoherenceBracket {
        // lower <= max over the set at best_alpha <= upper up to round-off
        lower: lower.min(upper),
        upper,
        witness_state: DensityMatrix::pure(&witness)?,
        witness_incoherent_povm: incoherent_povm(&best_alpha, d, n)?,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::monotones::divergence::TotalVariation;
    use crate::povm::random_povm;

    #[test]
    fn incoherent_input_gives_zero_bracket() {
        let p = random_povm(3, 2, 4).unwrap().dephase();
        let est = c_s_estimate(&p, &BracketConfig::default()).unwrap();
        assert_eq!((est.lower, est.upper), (0.0, 0.0));
        assert!(est.converged);
        let tv = distance_monotone(&p, &TotalVariation, &BracketConfig::default()).unwrap();
        assert_eq!((tv.lower, tv.upper), (0.0, 0.0));
    }

    #[test]
    fn x_basis_relative_entropy_is_one_bit() {
        let est = c_s_estimate(&builtins::x_basis(), &BracketConfig::default()).unwrap();
        assert!(est.converged, "{est:?}");
        assert!(est.lower <= est.upper);
        assert!((est.lower - 1.0).abs() < 1e-3 && (est.upper - 1.0).abs() < 1e-3, "{est:?}");
    }

    #[test]
    fn x_basis_total_variation_is_half() {
        let est = distance_monotone(&builtins::x_basis(), &TotalVariation, &BracketConfig::default()).unwrap();
        assert!(est.converged, "{est:?}");
        assert!((est.lower - 0.5).abs() < 1e-3 && (est.upper - 0.5).abs() < 1e-3, "{est:?}");
    }

    #[test]
    fn bracket_is_ordered_on_random_inputs() {
        for s in 0..4 {
            let p = random_povm(2 + s as usize % 2, 2, 100 + s).unwrap();
            let est = c_s_estimate(&p, &BracketConfig::default()).unwrap();
            assert!(0.0 <= est.lower && est.lower <= est.upper, "{est:?}");
            assert!(est.witness_incoherent_povm.is_incoherent(0.0));
            assert!(est.witness_incoherent_povm.validate(1e-9).valid);
        }
    }

    #[test]
    fn mixed_states_never_beat_pure_sup() {
        let mut rng = seed::rng(21, &[]);
        let config = BracketConfig::default();
        for s in 0..5 {
            let a = random_povm(2 + s as usize % 2, 3, s).unwrap();
            let m = random_povm(a.dim(), 3, 50 + s).unwrap().dephase();
            let (sup_re, _) = pure_state_sup(&a, &m, &RelativeEntropy, &config).unwrap();
            let (sup_tv, _) = pure_state_sup(&a, &m, &TotalVariation, &config).unwrap();
            for _ in 0..200 {
                let rho = DensityMatrix::random(a.dim(), &mut rng);
                let p = a.born_distribution(&rho).unwrap();
                let q = m.born_distribution(&rho).unwrap();
                assert!(RelativeEntropy.value(p.probs(), q.probs()) <= sup_re + 1e-9);
                assert!(TotalVariation.value(p.probs(), q.probs()) <= sup_tv + 1e-9);
            }
        }
    }
}
