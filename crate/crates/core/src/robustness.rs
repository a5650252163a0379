//! Robustness of measurement coherence.
//!
//! Primal: minimize `max_i sum_a (D_a)_ii - 1` over diagonal `D_a >= A_a`.
//! A feasible point gives the mixing measurement `M_a = (D_a - A_a)/s` once the
//! diagonals are raised so that `sum_a D_a = (1 + s) I`.
//!
//! Dual: maximize `sum_a Tr[Z_a A_a] - 1` over `Z_a >= 0` sharing one diagonal
//! `sigma` with `Tr sigma = 1`.
//!
//! The solver runs ADMM on the dual, splitting the affine set (shared diagonal,
//! unit trace) from the PSD cones, with over-relaxation and residual-balancing
//! penalty updates. Every check turns the iterates into a feasible primal point
//! and a feasible dual point, so the reported bracket is certified whatever
//! the iteration count.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{HermitianMatrix, C64};
use crate::monotones::{c_l1, c_linf};
use crate::povm::{gaussian_c64, Povm};
use crate::prelude::*;
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessProblem {
    pub povm: Povm,
    /// Target duality gap.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Random starting point; `None` starts from `I/d`.
    pub seed: Option<u64>,
}

impl RobustnessProblem {
    pub fn new(povm: Povm) -> Self {
        Self {
            povm,
            tolerance: 1e-7,
            max_iterations: 20_000,
            seed: None,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::MaxIter => "max_iter",
            Self::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    /// Certified upper bound `max(0, primal)`; the robustness estimate.
    pub value: f64,
    /// Diagonals of `D_a`, with `sum_a D_a = (1 + value) I`.
    pub primal_diagonals: Vec<Vec<f64>>,
    pub dual_matrices: Vec<HermitianMatrix>,
    /// Shared diagonal of the `Z_a`.
    pub sigma: Vec<f64>,
    /// Certified lower bound.
    pub dual_value: f64,
    pub duality_gap: f64,
    pub status: SolveStatus,
    pub iterations: usize,
}

impl SdpSolution {
    /// `M_a = (D_a - A_a)/s`, or `None` when `s` is within `tol` of zero.
    pub fn mixing_povm(&self, a: &Povm, tol: f64) -> Option<Povm> {
        if self.value <= tol {
            return None;
        }
        let comps = a
            .components()
            .iter()
            .zip(&self.primal_diagonals)
            .map(|(c, x)| HermitianMatrix::diagonal(x).sub(c).expect("same dim").scale(1.0 / self.value))
            .collect();
        Povm::new(comps).ok()
    }
}

struct Certificate {
    primal: f64,
    diagonals: Vec<Vec<f64>>,
    dual: f64,
    dual_matrices: Vec<HermitianMatrix>,
    sigma: Vec<f64>,
}

/// Feasible primal point from the scaled multipliers `y = rho U`.
fn primal_point(a: &[HermitianMatrix], y: &[HermitianMatrix]) -> (f64, Vec<Vec<f64>>) {
    let d = a[0].dim();
    let mut xs = Vec::with_capacity(a.len());
    for (ac, yc) in a.iter().zip(y) {
        let mut x: Vec<f64> = ac.diag().iter().zip(yc.diag()).map(|(p, q)| p - q).collect();
        let lm = HermitianMatrix::diagonal(&x).sub(ac).expect("same dim").eig_min();
        if lm < 0.0 {
            for v in x.iter_mut() {
                *v -= lm;
            }
        }
        xs.push(x);
    }
    let t = (0..d)
        .map(|i| xs.iter().map(|x| x[i]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    (t - 1.0, xs)
}

/// Restores `sum_a x_a = t 1` by raising the first diagonal.
fn balance(xs: &mut [Vec<f64>], t: f64) {
    let d = xs[0].len();
    for i in 0..d {
        let total: f64 = xs.iter().map(|x| x[i]).sum();
        xs[0][i] += t - total;
    }
}

/// Feasible dual point: common diagonal from the average, each `Z_a`
/// rescaled by congruence to hit it.
fn dual_point(a: &[HermitianMatrix], z: &[HermitianMatrix]) -> (f64, Vec<HermitianMatrix>, Vec<f64>) {
    let d = a[0].dim();
    let n = a.len() as f64;
    let mut sigma = vec![0.0; d];
    for zc in z {
        for (s, v) in sigma.iter_mut().zip(zc.diag()) {
            *s += v / n;
        }
    }
    for s in sigma.iter_mut() {
        *s = s.max(0.0);
    }
    let total: f64 = sigma.iter().sum();
    if total <= 0.0 {
        sigma = vec![1.0 / d as f64; d];
    } else {
        for s in sigma.iter_mut() {
            *s /= total;
        }
    }
    let mut dual = -1.0;
    let mut mats = Vec::with_capacity(z.len());
    for (ac, zc) in a.iter().zip(z) {
        let zd = zc.diag();
        let scale: Vec<f64> = zd
            .iter()
            .zip(&sigma)
            .map(|(&zi, &si)| if zi > 1e-300 { (si / zi).sqrt() } else { 0.0 })
            .collect();
        let polished = HermitianMatrix::from_fn_unchecked(d, |i, j| {
            if i == j && zd[i] <= 1e-300 {
                C64::new(sigma[i], 0.0)
            } else {
                zc.get(i, j) * (scale[i] * scale[j])
            }
        });
        dual += polished.trace_product(ac).expect("same dim");
        mats.push(polished);
    }
    (dual, mats, sigma)
}

fn certify(a: &[HermitianMatrix], z: &[HermitianMatrix], u: &[HermitianMatrix], rho: f64) -> Certificate {
    let y: Vec<HermitianMatrix> = u.iter().map(|m| m.scale(rho)).collect();
    let (primal, diagonals) = primal_point(a, &y);
    let (dual, dual_matrices, sigma) = dual_point(a, z);
    Certificate {
        primal,
        diagonals,
        dual,
        dual_matrices,
        sigma,
    }
}

fn frobenius2(m: &HermitianMatrix) -> f64 {
    m.as_slice().iter().map(|z| z.norm_sqr()).sum()
}

const ALPHA: f64 = 1.6;
const CHECK_EVERY: usize = 10;

/// Solves the robustness SDP to the requested duality gap.
pub fn robustness(problem: &RobustnessProblem) -> Result<SdpSolution> {
    if !(problem.tolerance > 0.0) {
        return Err(Error::OutOfRange {
            what: "tolerance",
            value: problem.tolerance,
            range: "> 0",
        });
    }
    let a = problem.povm.components();
    let n = a.len();
    let d = problem.povm.dim();

    let mut z: Vec<HermitianMatrix> = match problem.seed {
        None => vec![HermitianMatrix::identity(d).scale(1.0 / d as f64); n],
        Some(s) => {
            let mut rng = seed::rng(s, &[0x5d9]);
            (0..n)
                .map(|_| {
                    let g: Vec<C64> = (0..d * d).map(|_| gaussian_c64(&mut rng)).collect();
                    let w = HermitianMatrix::from_fn_unchecked(d, |i, j| {
                        (0..d).map(|k| g[i * d + k] * g[j * d + k].conj()).sum()
                    });
                    let t = w.trace() * (0.5 + rng.random::<f64>());
                    w.scale(1.0 / t)
                })
                .collect()
        }
    };
    let mut u = vec![HermitianMatrix::zeros(d); n];
    let mut rho = 1.0;

    let initial = certify(a, &z, &u, rho);
    let mut best_diagonals = initial.diagonals;
    let mut best_dual_point = (initial.dual_matrices, initial.sigma);
    let mut best_primal = f64::INFINITY;
    let mut best_dual = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut status = SolveStatus::MaxIter;

    for it in 0..problem.max_iterations.max(1) {
        iterations = it + 1;
        // affine step: free off-diagonals, shared diagonal with unit trace
        let v: Vec<HermitianMatrix> = (0..n)
            .map(|k| z[k].sub(&u[k]).and_then(|m| m.add(&a[k].scale(1.0 / rho))).expect("same dim"))
            .collect();
        let mut sigma = vec![0.0; d];
        for vk in &v {
            for (s, x) in sigma.iter_mut().zip(vk.diag()) {
                *s += x / n as f64;
            }
        }
        let shift = (1.0 - sigma.iter().sum::<f64>()) / d as f64;
        for s in sigma.iter_mut() {
            *s += shift;
        }
        let w: Vec<HermitianMatrix> = v
            .iter()
            .map(|vk| {
                HermitianMatrix::from_fn_unchecked(d, |i, j| if i == j { C64::new(sigma[i], 0.0) } else { vk.get(i, j) })
            })
            .collect();
        let mut r2 = 0.0;
        let mut s2 = 0.0;
        for k in 0..n {
            let w_hat = w[k].scale(ALPHA).add(&z[k].scale(1.0 - ALPHA)).expect("same dim");
            let z_new = w_hat.add(&u[k]).expect("same dim").psd_part();
            u[k] = u[k].add(&w_hat).and_then(|m| m.sub(&z_new)).expect("same dim");
            r2 += frobenius2(&w[k].sub(&z_new).expect("same dim"));
            s2 += frobenius2(&z_new.sub(&z[k]).expect("same dim"));
            z[k] = z_new;
        }

        if it % CHECK_EVERY == 0 || it + 1 == problem.max_iterations {
            let cert = certify(a, &z, &u, rho);
            if !cert.primal.is_finite() || !cert.dual.is_finite() {
                status = SolveStatus::Infeasible;
                break;
            }
            if cert.primal < best_primal {
                best_primal = cert.primal;
                best_diagonals = cert.diagonals;
            }
            if cert.dual > best_dual {
                best_dual = cert.dual;
                best_dual_point = (cert.dual_matrices, cert.sigma);
            }
            if best_primal - best_dual <= problem.tolerance {
                status = SolveStatus::Optimal;
                break;
            }
            let r = r2.sqrt();
            let s = rho * s2.sqrt();
            if r > 10.0 * s {
                rho *= 2.0;
                for m in u.iter_mut() {
                    *m = m.scale(0.5);
                }
            } else if s > 10.0 * r {
                rho *= 0.5;
                for m in u.iter_mut() {
                    *m = m.scale(2.0);
                }
            }
        }
    }

    if best_primal == f64::INFINITY {
        best_primal = initial.primal;
        best_dual = initial.dual;
    }
    let value = best_primal.max(0.0);
    let mut diagonals = best_diagonals;
    balance(&mut diagonals, 1.0 + value);
    Ok(SdpSolution {
        value,
        primal_diagonals: diagonals,
        dual_matrices: best_dual_point.0,
        sigma: best_dual_point.1,
        dual_value: best_dual,
        duality_gap: (best_primal - best_dual).max(0.0),
        status,
        iterations,
    })
}

/// For qubits the robustness equals `C_linf` (and `C_l1/2`).
pub fn qubit_robustness_closed_form(p: &Povm) -> Result<f64> {
    if p.dim() != 2 {
        return Err(Error::NotQubit { dim: p.dim() });
    }
    Ok(c_linf(p).value)
}

/// Dual point supported on the pair `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualWitness {
    pub i: usize,
    pub j: usize,
    pub matrices: Vec<HermitianMatrix>,
    pub sigma: Vec<f64>,
    /// Dual objective `sum_a |<i|A_a|j>|`.
    pub bound: f64,
}

/// `Z_a = |psi_a><psi_a|` with `psi_a = (|i> + e^{i theta_a}|j>)/sqrt 2` and
/// `theta_a = -arg <i|A_a|j>`, a feasible dual point whose objective is
/// `sum_a |<i|A_a|j>|`.
pub fn dual_witness_from_pair(p: &Povm, i: usize, j: usize) -> Result<DualWitness> {
    let d = p.dim();
    for index in [i, j] {
        if index >= d {
            return Err(Error::IndexOutOfRange { index, dim: d });
        }
    }
    if i >= j {
        return Err(Error::invalid(format!("witness pair needs i < j, got ({i}, {j})")));
    }
    let h = 1.0 / core::f64::consts::SQRT_2;
    let mut matrices = Vec::with_capacity(p.outcomes());
    let mut dual = -1.0;
    for c in p.components() {
        let theta = -c.get(i, j).arg();
        let mut psi = vec![C64::new(0.0, 0.0); d];
        psi[i] = C64::new(h, 0.0);
        psi[j] = C64::from_polar(h, theta);
        let z = HermitianMatrix::projector(&psi);
        dual += z.trace_product(c)?;
        matrices.push(z);
    }
    let mut sigma = vec![0.0; d];
    sigma[i] = 0.5;
    sigma[j] = 0.5;
    Ok(DualWitness {
        i,
        j,
        matrices,
        sigma,
        bound: dual,
    })
}

/// `C_linf <= R_C <= C_l1/2` check.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub c_linf: f64,
    pub robustness: f64,
    pub c_l1_half: f64,
    pub duality_gap: f64,
    pub status: SolveStatus,
    pub tolerance: f64,
    pub holds: bool,
}

pub fn sandwich_check(p: &Povm, tolerance: f64) -> Result<SandwichReport> {
    let sol = robustness(&RobustnessProblem::new(p.clone()).with_tolerance(tolerance))?;
    let lo = c_linf(p).value;
    let hi = c_l1(p) / 2.0;
    let holds = lo - tolerance <= sol.value && sol.value <= hi + tolerance;
    Ok(SandwichReport {
        c_linf: lo,
        robustness: sol.value,
        c_l1_half: hi,
        duality_gap: sol.duality_gap,
        status: sol.status,
        tolerance,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::experiment::{z_theta_phi, MeasurementDirection};
    use crate::povm::random_povm;
    use core::f64::consts::PI;

    fn solve(p: &Povm) -> SdpSolution {
        robustness(&RobustnessProblem::new(p.clone())).unwrap()
    }

    fn check_invariants(p: &Povm, sol: &SdpSolution, tol: f64) {
        let d = p.dim();
        for (c, x) in p.components().iter().zip(&sol.primal_diagonals) {
            assert!(HermitianMatrix::diagonal(x).sub(c).unwrap().eig_min() >= -tol);
        }
        for i in 0..d {
            let total: f64 = sol.primal_diagonals.iter().map(|x| x[i]).sum();
            assert!((total - 1.0 - sol.value).abs() < 1e-9);
        }
        assert!((sol.sigma.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut dual = -1.0;
        for (z, c) in sol.dual_matrices.iter().zip(p.components()) {
            assert!(z.eig_min() >= -1e-9);
            for i in 0..d {
                assert!((z.get(i, i).re - sol.sigma[i]).abs() < 1e-12);
            }
            dual += z.trace_product(c).unwrap();
        }
        assert!((dual - sol.dual_value).abs() < 1e-9);
        assert!(sol.dual_value <= sol.value + sol.duality_gap + 1e-12);
    }

    #[test]
    fn incoherent_is_zero() {
        let p = random_povm(3, 3, 1).unwrap().dephase();
        let sol = solve(&p);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.value < 1e-7);
        assert!(sol.mixing_povm(&p, 1e-7).is_none());
    }

    #[test]
    fn qubit_directions() {
        for k in 0..8 {
            let theta = k as f64 * PI / 8.0;
            let z = z_theta_phi(MeasurementDirection::new(theta, 0.7));
            let sol = solve(&z);
            assert_eq!(sol.status, SolveStatus::Optimal);
            assert!((sol.value - theta.sin().abs()).abs() < 1e-6);
            check_invariants(&z, &sol, 1e-9);
            assert!((qubit_robustness_closed_form(&z).unwrap() - theta.sin().abs()).abs() < 1e-12);
        }
        let z = z_theta_phi(MeasurementDirection::new(PI / 4.0, 0.0));
        assert!((qubit_robustness_closed_form(&z).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(qubit_robustness_closed_form(&builtins::x_basis()).unwrap(), 1.0);
        assert!(qubit_robustness_closed_form(&builtins::qutrit_dichotomic_g()).is_err());
    }

    #[test]
    fn qutrit_g_is_strictly_inside_sandwich() {
        let g = builtins::qutrit_dichotomic_g();
        let sol = solve(&g);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.duality_gap <= 1e-7);
        check_invariants(&g, &sol, 1e-9);
        // independent grid-and-bisection estimate: 0.53266
        assert!((sol.value - 0.532_665).abs() < 2e-5);
        let m = sol.mixing_povm(&g, 1e-7).unwrap();
        assert!(m.validate(1e-6).valid);
        let mixed = g.mix(&m, 1.0 / (1.0 + sol.value)).unwrap();
        assert!(mixed.is_incoherent(1e-6));
    }

    #[test]
    fn witnesses_match_linf() {
        for p in [builtins::x_basis(), builtins::qutrit_dichotomic_g()] {
            let lin = c_linf(&p);
            let (i, j) = lin.pair.unwrap();
            let w = dual_witness_from_pair(&p, i, j).unwrap();
            assert!((w.bound - lin.value).abs() < 1e-12);
            for z in &w.matrices {
                assert!(z.is_psd(1e-12));
                assert!((z.get(i, i).re - 0.5).abs() < 1e-15 && (z.get(j, j).re - 0.5).abs() < 1e-15);
            }
            assert!(w.bound <= solve(&p).value + 1e-7);
        }
        let g = builtins::qutrit_dichotomic_g();
        assert!(dual_witness_from_pair(&g, 0, 3).is_err());
        assert!(dual_witness_from_pair(&g, 1, 0).is_err());
    }

    #[test]
    fn restart_from_random_point_agrees() {
        for s in 0..5 {
            let p = random_povm(3, 3, 40 + s).unwrap();
            let a = solve(&p);
            let b = robustness(&RobustnessProblem::new(p.clone()).with_seed(s)).unwrap();
            assert!((a.value - b.value).abs() <= 2e-7);
        }
    }

    #[test]
    fn iteration_cap_keeps_certified_bracket() {
        let p = random_povm(4, 4, 9).unwrap();
        let sol = robustness(&RobustnessProblem::new(p.clone()).with_max_iterations(3)).unwrap();
        assert_eq!(sol.status, SolveStatus::MaxIter);
        check_invariants(&p, &sol, 1e-9);
        let exact = solve(&p).value;
        assert!(sol.dual_value <= exact + 1e-7 && exact <= sol.value + 1e-7);
    }

    #[test]
    fn sandwich_report() {
        let r = sandwich_check(&builtins::qutrit_dichotomic_g(), 1e-7).unwrap();
        assert!(r.holds);
        assert!(r.c_linf < r.robustness && r.robustness < r.c_l1_half);
        let r = sandwich_check(&builtins::x_basis(), 1e-7).unwrap();
        assert!(r.holds && (r.c_linf - r.c_l1_half).abs() < 1e-12);
    }
}
