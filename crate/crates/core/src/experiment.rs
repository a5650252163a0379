//! Simulated qubit measurement sweeps and the damped qutrit sweep.
//!
//! A direction `(theta, phi)` defines the gate
//!
//! ```text
//! V = [[ cos(theta/2),  e^{-i phi} sin(theta/2)],
//!      [-sin(theta/2),  e^{-i phi} cos(theta/2)]]
//! ```
//!
//! and the measurement `{V^dag|0><0|V, V^dag|1><1|V}`, whose `C_linf` is
//! `|sin theta|`. Sweeps estimate that number by detector tomography on
//! simulated counts.

use core::f64::consts::{PI, SQRT_2};

use crate::builtins::qutrit_dichotomic_g;
use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::linalg::{GeneralMatrix, HermitianMatrix, C64};
use crate::monotones::{c_l1, c_linf};
use crate::povm::Povm;
use crate::prelude::*;
use crate::robustness::{robustness, RobustnessProblem, SolveStatus};
use crate::tomography::{
    c_linf_per_run, reconstruct_direct, simulate_record, ProbeLabel, RunStatistics, TomographyRecord,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementDirection {
    pub theta: f64,
    pub phi: f64,
}

impl MeasurementDirection {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }
}

pub fn v_gate(dir: MeasurementDirection) -> GeneralMatrix {
    let (s, c) = (dir.theta / 2.0).sin_cos();
    let e = C64::from_polar(1.0, -dir.phi);
    GeneralMatrix::new(2, vec![C64::new(c, 0.0), e * s, C64::new(-s, 0.0), e * c]).expect("finite angles")
}

/// `Z_{theta,phi} = {V^dag|0><0|V, V^dag|1><1|V}`.
pub fn z_theta_phi(dir: MeasurementDirection) -> Povm {
    let v = v_gate(dir);
    let rows = (0..2).map(|r| {
        let bra: Vec<C64> = (0..2).map(|j| v.get(r, j).conj()).collect();
        HermitianMatrix::projector(&bra)
    });
    Povm::new(rows.collect()).expect("two qubit projectors")
}

/// A state-preparation gate acting on `|0>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeGate {
    pub name: &'static str,
    /// Probe label of the state it prepares.
    pub prepares: ProbeLabel,
    pub unitary: GeneralMatrix,
}

/// `U_00 = I`, `U_01 = H`, `U_10 = P H`, `U_11 = X`. `H|0>` is the probe
/// labelled `(1, 0)` and `P H |0>` the probe labelled `(0, 1)`.
pub fn prepare_probe_gates() -> Vec<ProbeGate> {
    let h = 1.0 / SQRT_2;
    let real = |m: [f64; 4]| GeneralMatrix::from_real(2, &m).expect("finite");
    let hadamard = real([h, h, h, -h]);
    let phase = GeneralMatrix::new(2, vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0)])
        .expect("finite");
    vec![
        ProbeGate {
            name: "U_00",
            prepares: ProbeLabel::new(0, 0),
            unitary: GeneralMatrix::identity(2),
        },
        ProbeGate {
            name: "U_01",
            prepares: ProbeLabel::new(1, 0),
            unitary: hadamard.clone(),
        },
        ProbeGate {
            name: "U_10",
            prepares: ProbeLabel::new(0, 1),
            unitary: phase.matmul(&hadamard).expect("2x2"),
        },
        ProbeGate {
            name: "U_11",
            prepares: ProbeLabel::new(1, 1),
            unitary: real([0.0, 1.0, 1.0, 0.0]),
        },
    ]
}

/// One-parameter families of directions, each swept over `[0, 2 pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepPath {
    /// `theta = pi/2`, varying `phi`.
    P1,
    /// `theta = pi/4`, varying `phi`.
    P2,
    /// `phi = 0`, varying `theta`.
    P3,
}

impl SweepPath {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "p1" | "theta=pi/2" => Ok(Self::P1),
            "p2" | "theta=pi/4" => Ok(Self::P2),
            "p3" | "phi=0" => Ok(Self::P3),
            other => Err(Error::invalid(format!("unknown sweep path `{other}` (expected p1, p2 or p3)"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::P1 => "p1",
            Self::P2 => "p2",
            Self::P3 => "p3",
        }
    }

    pub fn direction(&self, parameter: f64) -> MeasurementDirection {
        match self {
            Self::P1 => MeasurementDirection::new(PI / 2.0, parameter),
            Self::P2 => MeasurementDirection::new(PI / 4.0, parameter),
            Self::P3 => MeasurementDirection::new(parameter, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub path: SweepPath,
    pub step: f64,
    pub shots: u64,
    pub runs: usize,
    /// Applied to every probe state before measurement.
    pub noise: Option<KrausChannel>,
    pub seed: u64,
    /// Use exact probabilities instead of sampled counts.
    pub exact: bool,
}

impl SweepSpec {
    pub fn new(path: SweepPath) -> Self {
        Self {
            path,
            step: PI / 8.0,
            shots: 8192,
            runs: 10,
            noise: None,
            seed: 0,
            exact: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::OutOfRange {
                what: "step",
                value: self.step,
                range: "> 0",
            });
        }
        if self.shots == 0 {
            return Err(Error::Empty { what: "shot count" });
        }
        if self.runs == 0 {
            return Err(Error::Empty { what: "run count" });
        }
        if let Some(ch) = &self.noise {
            if ch.dim() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    found: ch.dim(),
                });
            }
        }
        Ok(())
    }

    /// Parameters `0, step, ..` up to and including `2 pi` (the end point is
    /// kept even though it repeats the start).
    pub fn parameters(&self) -> Vec<f64> {
        let full = 2.0 * PI;
        let count = (full / self.step + 1e-9).floor() as usize;
        let mut out: Vec<f64> = (0..=count).map(|k| k as f64 * self.step).collect();
        if let Some(last) = out.last_mut() {
            if (*last - full).abs() < 1e-9 {
                *last = full;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub parameter: f64,
    pub theta: f64,
    pub phi: f64,
    /// `|sin theta|`.
    pub theory: f64,
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
    /// `mean / theory`, absent where `sin theta = 0`.
    pub ratio: Option<f64>,
}

/// A sweep point with the record it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionResult {
    pub row: SweepRow,
    pub record: TomographyRecord,
}

/// `theta` is a multiple of `pi`.
pub fn is_singular(theta: f64) -> bool {
    theta.sin().abs() < 1e-12
}

/// Simulates and analyzes sweep point `index`; the counts use the seed
/// stream `index`.
pub fn run_direction(spec: &SweepSpec, index: usize, parameter: f64) -> Result<DirectionResult> {
    let dir = spec.path.direction(parameter);
    let povm = z_theta_phi(dir);
    let record = if spec.exact {
        match &spec.noise {
            None => TomographyRecord::exact(&povm),
            Some(ch) => {
                // exact probabilities of the noisy probes
                let noisy = ch.dual_apply_nonselective(&povm)?;
                TomographyRecord::exact(&noisy)
            }
        }
    } else {
        simulate_record(&povm, spec.shots, spec.runs, spec.noise.as_ref(), spec.seed, index as u64)?
    };
    let stats = RunStatistics::from_samples(&c_linf_per_run(&record)?);
    let theory = dir.theta.sin().abs();
    let ratio = if is_singular(dir.theta) {
        None
    } else {
        Some(stats.mean / theory)
    };
    Ok(DirectionResult {
        row: SweepRow {
            index,
            parameter,
            theta: dir.theta,
            phi: dir.phi,
            theory,
            mean: stats.mean,
            std: stats.std,
            stderr: stats.stderr,
            ratio,
        },
        record,
    })
}

pub fn run_sweep_with_records(spec: &SweepSpec) -> Result<Vec<DirectionResult>> {
    spec.validate()?;
    spec.parameters()
        .into_iter()
        .enumerate()
        .map(|(i, t)| run_direction(spec, i, t))
        .collect()
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    Ok(run_sweep_with_records(spec)?.into_iter().map(|r| r.row).collect())
}

/// `n` evenly spaced damping rates from 0 to 1 inclusive.
pub fn default_gamma_grid(points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..points).map(|k| k as f64 / (points - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig2Row {
    pub gamma: f64,
    pub rc: f64,
    pub gap: f64,
    pub clinf: f64,
    pub cl1half: f64,
    pub status: SolveStatus,
}

/// Coherence of the damped qutrit measurement `{G_0, I - G_0}` along a grid
/// of damping rates.
pub fn run_fig2_sweep(gammas: &[f64], tolerance: f64) -> Result<Vec<Fig2Row>> {
    let g = qutrit_dichotomic_g();
    gammas
        .iter()
        .map(|&gamma| {
            let annotate = |e: Error| Error::invalid(format!("gamma = {gamma}: {e}"));
            let ch = KrausChannel::amplitude_damping(3, gamma).map_err(annotate)?;
            let damped = ch.dual_apply_nonselective(&g).map_err(annotate)?;
            let sol = robustness(&RobustnessProblem::new(damped.clone()).with_tolerance(tolerance)).map_err(annotate)?;
            Ok(Fig2Row {
                gamma,
                rc: sol.value,
                gap: sol.duality_gap,
                clinf: c_linf(&damped).value,
                cl1half: c_l1(&damped) / 2.0,
                status: sol.status,
            })
        })
        .collect()
}

/// Exact-probability reconstruction of a direction, for quick checks.
pub fn reconstructed_direction(dir: MeasurementDirection) -> Result<Povm> {
    Ok(reconstruct_direct(&TomographyRecord::exact(&z_theta_phi(dir)))?.povm)
}
