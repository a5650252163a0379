//! Detector tomography from a fixed family of `d^2` pure probe states.
//!
//! Probe `(k, l)`: `|k>` for `k == l`, `(|k> + |l>)/sqrt 2` for `k > l` and
//! `(|k> + i|l>)/sqrt 2` for `k < l`. With `p(a|kl) = <psi_kl|A_a|psi_kl>`,
//!
//! ```text
//! <k|A_a|k>       = p(a|kk)
//! Re <k|A_a|l>    = p(a|kl) - (p(a|kk) + p(a|ll))/2     (k > l)
//! Im <l|A_a|k>    = p(a|kl) - (p(a|kk) + p(a|ll))/2     (k < l)
//! ```
//!
//! so every component is read off directly. For arbitrary probe states the
//! linear system `Gamma^T chi_a = mu_a` is solved instead (see [`vectorize`]).

use alloc::collections::BTreeMap;
use core::f64::consts::SQRT_2;
use core::fmt;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::linalg::{condition_number, solve_real};
use crate::linalg::{HermitianMatrix, C64};
use crate::monotones::{c_l1, c_linf};
use crate::povm::{DensityMatrix, Povm};
use crate::prelude::*;
use crate::robustness::{robustness, RobustnessProblem};
use crate::seed;

/// Condition number of `Gamma` above which probes are rejected.
pub const MAX_CONDITION: f64 = 1e8;

/// Probe index `(k, l)`; ordered row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProbeLabel {
    pub k: usize,
    pub l: usize,
}

impl ProbeLabel {
    pub fn new(k: usize, l: usize) -> Self {
        Self { k, l }
    }

    /// Parses `"k,l"`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("probe label must look like `k,l`, got `{text}`"));
        let (k, l) = text.split_once(',').ok_or_else(bad)?;
        Ok(Self {
            k: k.trim().parse().map_err(|_| bad())?,
            l: l.trim().parse().map_err(|_| bad())?,
        })
    }
}

impl fmt::Display for ProbeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.k, self.l)
    }
}

/// State vector of probe `(k, l)` in dimension `d`.
pub fn probe_state(d: usize, k: usize, l: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); d];
    if k == l {
        v[k] = C64::new(1.0, 0.0);
    } else {
        let h = 1.0 / SQRT_2;
        v[k] = C64::new(h, 0.0);
        v[l] = if k > l { C64::new(h, 0.0) } else { C64::new(0.0, h) };
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeFamily {
    dim: usize,
    labels: Vec<ProbeLabel>,
    states: Vec<DensityMatrix>,
}

impl ProbeFamily {
    /// The `d^2` direct-readout probes, labels in row-major order.
    pub fn standard(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::OutOfRange {
                what: "probe dimension",
                value: dim as f64,
                range: ">= 2",
            });
        }
        let mut labels = Vec::with_capacity(dim * dim);
        let mut states = Vec::with_capacity(dim * dim);
        for k in 0..dim {
            for l in 0..dim {
                labels.push(ProbeLabel::new(k, l));
                states.push(DensityMatrix::pure(&probe_state(dim, k, l))?);
            }
        }
        Ok(Self { dim, labels, states })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[ProbeLabel] {
        &self.labels
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Condition number of `Gamma` for this family.
    pub fn condition_number(&self) -> f64 {
        let n = self.dim * self.dim;
        condition_number(&gamma_matrix(&self.states), n).0
    }
}

/// Real coordinates of a Hermitian matrix, `x = q d + r`: the diagonal entry
/// for `q == r`, `Re m_qr` for `q < r` and `Im m_rq` for `q > r`. Exact in
/// both directions; [`probe_vector`] carries the matching weights so that
/// `Tr[rho A] = probe_vector(rho) . vectorize(A)`.
pub fn vectorize(m: &HermitianMatrix) -> Vec<f64> {
    coordinates(m, 1.0)
}

/// Coordinates of a state: like [`vectorize`] with off-diagonal parts doubled.
pub fn probe_vector(m: &HermitianMatrix) -> Vec<f64> {
    coordinates(m, 2.0)
}

fn coordinates(m: &HermitianMatrix, off: f64) -> Vec<f64> {
    let d = m.dim();
    let mut out = vec![0.0; d * d];
    for q in 0..d {
        for r in 0..d {
            out[q * d + r] = match q.cmp(&r) {
                core::cmp::Ordering::Equal => m.get(q, q).re,
                core::cmp::Ordering::Less => off * m.get(q, r).re,
                core::cmp::Ordering::Greater => off * m.get(r, q).im,
            };
        }
    }
    out
}

/// Inverse of [`vectorize`].
pub fn devectorize(chi: &[f64], d: usize) -> Result<HermitianMatrix> {
    if chi.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: chi.len(),
        });
    }
    let mut data = vec![C64::new(0.0, 0.0); d * d];
    for q in 0..d {
        data[q * d + q] = C64::new(chi[q * d + q], 0.0);
        for r in (q + 1)..d {
            let z = C64::new(chi[q * d + r], chi[r * d + q]);
            data[q * d + r] = z;
            data[r * d + q] = z.conj();
        }
    }
    HermitianMatrix::new(d, data)
}

/// Per-outcome real vectors `chi_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorizedPovm {
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

impl VectorizedPovm {
    pub fn from_povm(p: &Povm) -> Self {
        Self {
            dim: p.dim(),
            vectors: p.components().iter().map(vectorize).collect(),
        }
    }

    pub fn to_povm(&self) -> Result<Povm> {
        Povm::new(
            self.vectors
                .iter()
                .map(|chi| devectorize(chi, self.dim))
                .collect::<Result<_>>()?,
        )
    }
}

/// `Gamma` with column `k` equal to [`probe_vector`] of the `k`-th state,
/// row-major.
pub fn gamma_matrix(states: &[DensityMatrix]) -> Vec<f64> {
    let n = states.len();
    let cols: Vec<Vec<f64>> = states.iter().map(|s| probe_vector(s.matrix())).collect();
    let mut g = vec![0.0; n * n];
    for (k, col) in cols.iter().enumerate() {
        for (x, v) in col.iter().enumerate().take(n) {
            g[x * n + k] = *v;
        }
    }
    g
}

/// Outcome probabilities per probe label.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    pub dim: usize,
    pub outcomes: usize,
    pub rows: BTreeMap<ProbeLabel, Vec<f64>>,
}

impl ProbabilityTable {
    /// Exact probabilities of `p` on the standard probes.
    pub fn exact(p: &Povm) -> Self {
        let d = p.dim();
        let mut rows = BTreeMap::new();
        for k in 0..d {
            for l in 0..d {
                rows.insert(ProbeLabel::new(k, l), p.pure_state_probabilities(&probe_state(d, k, l)));
            }
        }
        Self {
            dim: d,
            outcomes: p.outcomes(),
            rows,
        }
    }

    pub fn row(&self, k: usize, l: usize) -> Result<&[f64]> {
        let row = self
            .rows
            .get(&ProbeLabel::new(k, l))
            .ok_or(Error::MissingProbe { k, l })?;
        if row.len() != self.outcomes {
            return Err(Error::BadRow {
                probe: ProbeLabel::new(k, l).to_string(),
                expected: self.outcomes,
                found: row.len(),
            });
        }
        Ok(row)
    }
}

/// Raw tomography data.
#[derive(Debug, Clone, PartialEq)]
pub enum RecordData {
    Probabilities(BTreeMap<ProbeLabel, Vec<f64>>),
    /// Per probe, one count vector per run; every vector sums to `shots`.
    Counts {
        shots: u64,
        table: BTreeMap<ProbeLabel, Vec<Vec<u64>>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyRecord {
    dim: usize,
    outcomes: usize,
    runs: usize,
    data: RecordData,
}

impl TomographyRecord {
    pub fn from_probabilities(table: ProbabilityTable, tol: f64) -> Result<Self> {
        for (label, row) in &table.rows {
            check_row_len(label, row.len(), table.outcomes)?;
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > tol.max(1e-9) {
                return Err(Error::OutOfRange {
                    what: "probability row total",
                    value: total,
                    range: "1",
                });
            }
        }
        Ok(Self {
            dim: table.dim,
            outcomes: table.outcomes,
            runs: 1,
            data: RecordData::Probabilities(table.rows),
        })
    }

    pub fn exact(p: &Povm) -> Self {
        let table = ProbabilityTable::exact(p);
        Self {
            dim: table.dim,
            outcomes: table.outcomes,
            runs: 1,
            data: RecordData::Probabilities(table.rows),
        }
    }

    pub fn from_counts(
        dim: usize,
        outcomes: usize,
        shots: u64,
        table: BTreeMap<ProbeLabel, Vec<Vec<u64>>>,
    ) -> Result<Self> {
        if shots == 0 {
            return Err(Error::Empty { what: "shot count" });
        }
        let runs = table.values().next().map_or(0, |r| r.len());
        if runs == 0 {
            return Err(Error::Empty { what: "run count" });
        }
        for (label, per_run) in &table {
            if per_run.len() != runs {
                return Err(Error::invalid(format!(
                    "probe {label} has {} runs, expected {runs}",
                    per_run.len()
                )));
            }
            for row in per_run {
                check_row_len(label, row.len(), outcomes)?;
                let total: u64 = row.iter().sum();
                if total != shots {
                    return Err(Error::invalid(format!(
                        "probe {label}: counts sum to {total}, expected {shots}"
                    )));
                }
            }
        }
        Ok(Self {
            dim,
            outcomes,
            runs,
            data: RecordData::Counts { shots, table },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn data(&self) -> &RecordData {
        &self.data
    }

    /// Relative frequencies of one run (the exact table for probability records).
    pub fn run_table(&self, run: usize) -> Result<ProbabilityTable> {
        if run >= self.runs {
            return Err(Error::IndexOutOfRange {
                index: run,
                dim: self.runs,
            });
        }
        let rows = match &self.data {
            RecordData::Probabilities(rows) => rows.clone(),
            RecordData::Counts { shots, table } => table
                .iter()
                .map(|(label, per_run)| {
                    let f = per_run[run].iter().map(|&c| c as f64 / *shots as f64).collect();
                    (*label, f)
                })
                .collect(),
        };
        Ok(ProbabilityTable {
            dim: self.dim,
            outcomes: self.outcomes,
            rows,
        })
    }

    /// Frequencies pooled over all runs.
    pub fn pooled_table(&self) -> ProbabilityTable {
        let rows = match &self.data {
            RecordData::Probabilities(rows) => rows.clone(),
            RecordData::Counts { shots, table } => table
                .iter()
                .map(|(label, per_run)| {
                    let total = *shots as f64 * per_run.len() as f64;
                    let f = (0..self.outcomes)
                        .map(|a| per_run.iter().map(|r| r[a]).sum::<u64>() as f64 / total)
                        .collect();
                    (*label, f)
                })
                .collect(),
        };
        ProbabilityTable {
            dim: self.dim,
            outcomes: self.outcomes,
            rows,
        }
    }
}

fn check_row_len(label: &ProbeLabel, found: usize, expected: usize) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::BadRow {
            probe: label.to_string(),
            expected,
            found,
        })
    }
}

/// Reconstructed measurement with its positivity diagnostics. Shot noise can
/// push components slightly out of the PSD cone; that is reported here and
/// only removed on request by [`Reconstruction::project_psd`].
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub povm: Povm,
    /// Smallest eigenvalue of each component.
    pub psd_margins: Vec<f64>,
    pub completeness_residual: f64,
}

impl Reconstruction {
    fn new(povm: Povm) -> Self {
        Self {
            psd_margins: povm.components().iter().map(|c| c.eig_min()).collect(),
            completeness_residual: povm.completeness_residual(),
            povm,
        }
    }

    pub fn psd_violated(&self, tol: f64) -> bool {
        self.psd_margins.iter().any(|&m| m < -tol)
    }

    /// Post-processing: clips negative eigenvalues, then restores completeness
    /// by `S^{-1/2} A_a S^{-1/2}` with `S = sum_a A_a`.
    pub fn project_psd(&self) -> Result<Povm> {
        let clipped: Vec<HermitianMatrix> = self.povm.components().iter().map(|c| c.psd_part()).collect();
        let total = clipped[1..].iter().try_fold(clipped[0].clone(), |acc, c| acc.add(c))?;
        if total.eig_min() <= 1e-12 {
            return Err(Error::invalid("clipped components do not span the space"));
        }
        let inv_sqrt = total.spectral_map(|l| 1.0 / l.sqrt()).to_general();
        Povm::new(
            clipped
                .iter()
                .map(|c| crate::linalg::conj_sandwich(&inv_sqrt, c))
                .collect::<Result<_>>()?,
        )
    }
}

/// Direct readout from a table on the standard probes.
pub fn reconstruct_direct_table(table: &ProbabilityTable) -> Result<Reconstruction> {
    let d = table.dim;
    let mut comps = Vec::with_capacity(table.outcomes);
    for a in 0..table.outcomes {
        let mut data = vec![C64::new(0.0, 0.0); d * d];
        for k in 0..d {
            data[k * d + k] = C64::new(table.row(k, k)?[a], 0.0);
        }
        for k in 0..d {
            for l in 0..k {
                let base = 0.5 * (table.row(k, k)?[a] + table.row(l, l)?[a]);
                let re = table.row(k, l)?[a] - base;
                let im = table.row(l, k)?[a] - base;
                // re = Re <k|A|l>, im = Im <k|A|l>
                data[k * d + l] = C64::new(re, im);
                data[l * d + k] = C64::new(re, -im);
            }
        }
        comps.push(HermitianMatrix::new(d, data)?);
    }
    Ok(Reconstruction::new(Povm::new(comps)?))
}

/// Direct readout from pooled frequencies.
pub fn reconstruct_direct(rec: &TomographyRecord) -> Result<Reconstruction> {
    reconstruct_direct_table(&rec.pooled_table())
}

/// Solves `Gamma^T chi_a = mu_a` for arbitrary probe states;
/// `probabilities[k][a]` is the frequency of outcome `a` on `states[k]`.
pub fn reconstruct_general(states: &[DensityMatrix], probabilities: &[Vec<f64>]) -> Result<Reconstruction> {
    let first = states.first().ok_or(Error::Empty { what: "probe count" })?;
    let d = first.dim();
    let m = d * d;
    if states.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: states.len(),
        });
    }
    if probabilities.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: probabilities.len(),
        });
    }
    let outcomes = probabilities[0].len();
    for (k, row) in probabilities.iter().enumerate() {
        if row.len() != outcomes {
            return Err(Error::BadRow {
                probe: k.to_string(),
                expected: outcomes,
                found: row.len(),
            });
        }
    }
    let gamma = gamma_matrix(states);
    let (condition, weakest) = condition_number(&gamma, m);
    let singular = |condition: f64| {
        let x = (0..m)
            .max_by(|&i, &j| weakest[i].abs().total_cmp(&weakest[j].abs()))
            .unwrap_or(0);
        Error::SingularProbes {
            condition,
            q: x / d,
            r: x % d,
        }
    };
    if !(condition <= MAX_CONDITION) {
        return Err(singular(condition));
    }
    let mut gamma_t = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            gamma_t[i * m + j] = gamma[j * m + i];
        }
    }
    let mut comps = Vec::with_capacity(outcomes);
    for a in 0..outcomes {
        let mu: Vec<f64> = probabilities.iter().map(|row| row[a]).collect();
        let chi = solve_real(&gamma_t, &mu).ok_or_else(|| singular(f64::INFINITY))?;
        comps.push(devectorize(&chi, d)?);
    }
    Ok(Reconstruction::new(Povm::new(comps)?))
}

/// Draws one multinomial sample of `shots` over `probs` by sequential
/// binomials.
pub fn sample_counts<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut left = shots;
    let mut mass = 1.0f64;
    for (a, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if a + 1 == probs.len() {
            out[a] = left;
            break;
        }
        let frac = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let c = Binomial::new(left, frac).expect("valid binomial").sample(rng);
        out[a] = c;
        left -= c;
        mass -= p;
    }
    out
}

/// Simulated counts on the standard probes. With `noise`, the channel acts on
/// each probe state before it is measured. Probe `(k, l)` draws from the
/// stream `seed::rng(seed, [stream, k, l])`, all runs in order.
pub fn simulate_record(
    p: &Povm,
    shots: u64,
    runs: usize,
    noise: Option<&KrausChannel>,
    seed: u64,
    stream: u64,
) -> Result<TomographyRecord> {
    let d = p.dim();
    let family = ProbeFamily::standard(d)?;
    let mut table = BTreeMap::new();
    for (label, state) in family.labels().iter().zip(family.states()) {
        let state = match noise {
            Some(ch) => ch.apply_to_state(state)?,
            None => state.clone(),
        };
        let probs = p.born_distribution(&state)?.probs().to_vec();
        let mut rng = seed::rng(seed, &[stream, label.k as u64, label.l as u64]);
        let per_run = (0..runs).map(|_| sample_counts(&probs, shots, &mut rng)).collect();
        table.insert(*label, per_run);
    }
    TomographyRecord::from_counts(d, p.outcomes(), shots, table)
}

/// Mean with run-to-run spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunStatistics {
    pub mean: f64,
    /// Sample standard deviation (zero for a single run).
    pub std: f64,
    /// `std / sqrt(runs)`.
    pub stderr: f64,
}

impl RunStatistics {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std,
            stderr: std / n.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport {
    /// Reconstruction from pooled frequencies.
    pub reconstruction: Reconstruction,
    pub runs: usize,
    pub c_linf: RunStatistics,
    pub c_l1_half: RunStatistics,
    pub robustness: RunStatistics,
}

/// Per-run `C_linf` estimates (direct readout of every run).
pub fn c_linf_per_run(rec: &TomographyRecord) -> Result<Vec<f64>> {
    (0..rec.runs())
        .map(|r| Ok(c_linf(&reconstruct_direct_table(&rec.run_table(r)?)?.povm).value))
        .collect()
}

/// Reconstructs every run and summarizes `C_linf`, `C_l1/2` and `R_C`.
pub fn coherence_from_counts(rec: &TomographyRecord, tolerance: f64) -> Result<CoherenceReport> {
    let mut linf = Vec::with_capacity(rec.runs());
    let mut l1 = Vec::with_capacity(rec.runs());
    let mut rob = Vec::with_capacity(rec.runs());
    for r in 0..rec.runs() {
        let povm = reconstruct_direct_table(&rec.run_table(r)?)?.povm;
        linf.push(c_linf(&povm).value);
        l1.push(c_l1(&povm) / 2.0);
        let sol = robustness(&RobustnessProblem::new(povm).with_tolerance(tolerance))?;
        rob.push(sol.value);
    }
    Ok(CoherenceReport {
        reconstruction: reconstruct_direct(rec)?,
        runs: rec.runs(),
        c_linf: RunStatistics::from_samples(&linf),
        c_l1_half: RunStatistics::from_samples(&l1),
        robustness: RunStatistics::from_samples(&rob),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{z_theta_phi, MeasurementDirection};
    use crate::povm::random_povm;
    use core::f64::consts::PI;

    fn max_entry_error(a: &Povm, b: &Povm) -> f64 {
        a.components()
            .iter()
            .zip(b.components())
            .map(|(x, y)| x.sub(y).unwrap().max_abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn qubit_probe_family() {
        let h = 1.0 / SQRT_2;
        assert_eq!(probe_state(2, 0, 0), vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        assert_eq!(probe_state(2, 1, 0), vec![C64::new(h, 0.0), C64::new(h, 0.0)]);
        assert_eq!(probe_state(2, 0, 1), vec![C64::new(h, 0.0), C64::new(0.0, h)]);
        let fam = ProbeFamily::standard(3).unwrap();
        assert_eq!(fam.len(), 9);
        for d in 2..6 {
            assert!(ProbeFamily::standard(d).unwrap().condition_number() < 100.0);
        }
    }

    #[test]
    fn vectorization_is_a_trace_isometry() {
        let mut rng = seed::rng(3, &[]);
        for d in 1..5 {
            let rho = DensityMatrix::random(d, &mut rng);
            let p = random_povm(d, 2, d as u64).unwrap();
            let a = p.component(0);
            let lhs = rho.matrix().trace_product(a).unwrap();
            let rhs: f64 = probe_vector(rho.matrix()).iter().zip(vectorize(a)).map(|(x, y)| x * y).sum();
            assert!((lhs - rhs).abs() < 1e-12);
            assert_eq!(&devectorize(&vectorize(a), d).unwrap(), a);
        }
    }

    #[test]
    fn direct_recovers_x_basis() {
        let z = z_theta_phi(MeasurementDirection::new(PI / 2.0, 0.0));
        let rec = reconstruct_direct(&TomographyRecord::exact(&z)).unwrap();
        assert!(max_entry_error(&rec.povm, &crate::builtins::x_basis()) < 1e-12);
    }

    #[test]
    fn direct_and_general_agree() {
        for seed in 0..20 {
            let d = 2 + seed as usize % 3;
            let p = random_povm(d, 3, seed).unwrap();
            let direct = reconstruct_direct(&TomographyRecord::exact(&p)).unwrap();
            assert!(max_entry_error(&direct.povm, &p) < 1e-10);
            let fam = ProbeFamily::standard(d).unwrap();
            let probs: Vec<Vec<f64>> = fam
                .labels()
                .iter()
                .map(|l| p.pure_state_probabilities(&probe_state(d, l.k, l.l)))
                .collect();
            let general = reconstruct_general(fam.states(), &probs).unwrap();
            assert!(max_entry_error(&general.povm, &direct.povm) < 1e-10);
        }
    }

    #[test]
    fn duplicated_probe_is_singular() {
        let fam = ProbeFamily::standard(2).unwrap();
        let mut states = fam.states().to_vec();
        states[3] = states[2].clone();
        let probs = vec![vec![0.5, 0.5]; 4];
        assert!(matches!(
            reconstruct_general(&states, &probs),
            Err(Error::SingularProbes { .. })
        ));
    }

    #[test]
    fn missing_probe_is_reported() {
        let mut table = ProbabilityTable::exact(&crate::builtins::x_basis());
        table.rows.remove(&ProbeLabel::new(0, 1));
        assert_eq!(
            reconstruct_direct_table(&table).unwrap_err(),
            Error::MissingProbe { k: 0, l: 1 }
        );
    }

    #[test]
    fn counts_are_reproducible_and_complete() {
        let z = z_theta_phi(MeasurementDirection::new(PI / 4.0, 0.3));
        let a = simulate_record(&z, 500, 3, None, 11, 0).unwrap();
        let b = simulate_record(&z, 500, 3, None, 11, 0).unwrap();
        assert_eq!(a, b);
        for r in 0..3 {
            let rec = reconstruct_direct_table(&a.run_table(r).unwrap()).unwrap();
            assert!(rec.completeness_residual < 1e-12);
        }
    }

    #[test]
    fn projection_restores_validity() {
        let z = z_theta_phi(MeasurementDirection::new(PI / 2.0, 0.0));
        let rec = simulate_record(&z, 50, 1, None, 5, 0).unwrap();
        let r = reconstruct_direct(&rec).unwrap();
        let fixed = r.project_psd().unwrap();
        assert!(fixed.validate(1e-9).valid);
    }

    #[test]
    fn coherence_report_exact() {
        let z = z_theta_phi(MeasurementDirection::new(PI / 2.0, 0.0));
        let rep = coherence_from_counts(&TomographyRecord::exact(&z), 1e-7).unwrap();
        assert!((rep.c_linf.mean - 1.0).abs() < 1e-12);
        assert!((rep.c_l1_half.mean - 1.0).abs() < 1e-12);
        assert!((rep.robustness.mean - 1.0).abs() < 1e-6);
        let z0 = z_theta_phi(MeasurementDirection::new(0.0, 0.0));
        let rep = coherence_from_counts(&TomographyRecord::exact(&z0), 1e-7).unwrap();
        assert!(rep.c_linf.mean < 1e-15);
        assert!(rep.robustness.mean.abs() < 1e-7);
    }

    #[test]
    fn run_statistics() {
        let s = RunStatistics::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.stderr - s.std / 2.0).abs() < 1e-15);
    }
}
