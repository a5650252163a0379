use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use povm_coherence::builtins::parse_angle;
use povm_coherence::channels::selective_labels;
use povm_coherence::experiment::{
    default_gamma_grid, run_direction, run_fig2_sweep, DirectionResult, SweepPath, SweepSpec,
};
use povm_coherence::monotones::{c_l1, c_linf, distance_monotone, BracketConfig, Distance};
use povm_coherence::robustness::{dual_witness_from_pair, robustness, RobustnessProblem, SolveStatus};
use povm_coherence::tomography::{coherence_from_counts, RunStatistics};
use povm_coherence::{Povm, DEFAULT_TOLERANCE};

use crate::error::{CliError, Result};
use crate::io::{self, hermitian_to_json, CountsJson, PovmJson};
use crate::plot::{emit_plot_data, Format, Table};

#[derive(Debug, Parser)]
#[command(name = "povm-coherence", version, about = "Coherence of quantum measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a measurement or channel file (or builtin name).
    Validate(ValidateArgs),
    /// Closed-form monotones or a distance-based bracket.
    Monotone(MonotoneArgs),
    /// Robustness of coherence via the SDP.
    Robustness(RobustnessArgs),
    #[command(subcommand)]
    Channel(ChannelCommand),
    #[command(subcommand)]
    Tomo(TomoCommand),
    #[command(subcommand)]
    Simulate(SimulateCommand),
}

#[derive(Debug, Subcommand)]
pub enum ChannelCommand {
    /// Dual (Heisenberg-picture) action of a channel on a measurement.
    Apply(ChannelApplyArgs),
}

#[derive(Debug, Subcommand)]
pub enum TomoCommand {
    /// Direct reconstruction from per-probe counts.
    Reconstruct(ReconstructArgs),
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Sampled single-qubit direction sweep.
    Sweep(SweepArgs),
    /// Damped qutrit measurement over a grid of damping rates.
    Fig2(Fig2Args),
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

fn angle(s: &str) -> Result<f64, String> {
    parse_angle(s).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Measurement file or builtin name.
    #[arg(long, conflicts_with = "channel", required_unless_present = "channel")]
    pub povm: Option<String>,
    /// Channel file or builtin name.
    #[arg(long)]
    pub channel: Option<String>,
    /// Dimension for builtin channel names.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub dim: u64,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE, value_parser = positive_f64)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Linf,
    L1,
    Cs,
    Tv,
}

#[derive(Debug, Args)]
pub struct MonotoneArgs {
    #[arg(long)]
    pub povm: String,
    #[arg(long, value_enum)]
    pub which: Which,
    /// Target bracket width for cs and tv.
    #[arg(long, default_value_t = 1e-3, value_parser = positive_f64)]
    pub gap_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cutting-plane iteration cap for cs and tv.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iter: u64,
    /// Validation tolerance for the input measurement.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE, value_parser = positive_f64)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[arg(long)]
    pub povm: String,
    /// Target duality gap.
    #[arg(long, default_value_t = 1e-7, value_parser = positive_f64)]
    pub tol: f64,
    #[arg(long, default_value_t = 20_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iter: u64,
    /// Random initial dual point instead of the uniform one.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Include primal and dual certificates.
    #[arg(long)]
    pub emit_witness: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ChannelApplyArgs {
    /// Channel file or builtin name (dimension taken from the measurement).
    #[arg(long)]
    pub channel: String,
    #[arg(long)]
    pub povm: String,
    /// Keep one outcome per (a, mu) pair, labeled `a:mu`.
    #[arg(long)]
    pub selective: bool,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE, value_parser = positive_f64)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub counts: PathBuf,
    /// Post-process the pooled reconstruction onto valid measurements.
    #[arg(long)]
    pub project_psd: bool,
    /// Duality-gap target for the per-run robustness values.
    #[arg(long, default_value_t = 1e-7, value_parser = positive_f64)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_parser = ["p1", "p2", "p3"])]
    pub path: String,
    #[arg(long, default_value_t = 8192, value_parser = clap::value_parser!(u64).range(1..))]
    pub shots: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub runs: u64,
    /// Channel applied to the probe states (builtin name or file).
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Parameter step, e.g. `pi/8`.
    #[arg(long, default_value = "pi/8", value_parser = angle)]
    pub step: f64,
    /// Exact probabilities instead of sampled counts.
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Defaults to the extension of --out.
    #[arg(long)]
    pub format: Option<Format>,
    /// Directory receiving one counts file per direction.
    #[arg(long)]
    pub counts_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
}

#[derive(Debug, Args)]
pub struct Fig2Args {
    /// Number of damping rates from 0 to 1 inclusive.
    #[arg(long, default_value_t = 21, value_parser = clap::value_parser!(u64).range(1..=100_000))]
    pub grid: u64,
    #[arg(long, default_value_t = 1e-7, value_parser = positive_f64)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<Format>,
}

/// `Ok(Some(_))` means output was written but the command still failed,
/// e.g. an invalid measurement or a solver that hit its iteration cap.
pub type Outcome = Result<Option<CliError>>;

pub fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Validate(a) => validate(a),
        Command::Monotone(a) => monotone(a),
        Command::Robustness(a) => robustness_cmd(a),
        Command::Channel(ChannelCommand::Apply(a)) => channel_apply(a),
        Command::Tomo(TomoCommand::Reconstruct(a)) => reconstruct(a),
        Command::Simulate(SimulateCommand::Sweep(a)) => sweep(a),
        Command::Simulate(SimulateCommand::Fig2(a)) => fig2(a),
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

/// Rejects an output path that coincides with one of the inputs.
fn check_distinct(out: Option<&Path>, inputs: &[&str]) -> Result<()> {
    if let Some(out) = out {
        for input in inputs {
            let p = Path::new(input);
            if p.exists() && same_file(out, p) {
                return Err(CliError::usage(format!("--out `{}` would overwrite an input", out.display())));
            }
        }
    }
    Ok(())
}

fn write_json(out: Option<&Path>, value: &Value) -> Result<()> {
    io::emit_text(out, &io::to_pretty(value))
}

fn load_valid_povm(spec: &str, tol: f64) -> Result<Povm> {
    let p = io::load_povm(spec)?;
    p.validate(tol).into_result()?;
    Ok(p)
}

fn stats_json(s: &RunStatistics) -> Value {
    json!({ "mean": s.mean, "std": s.std, "stderr": s.stderr })
}

fn validate(a: ValidateArgs) -> Outcome {
    let inputs: Vec<&str> = a.povm.iter().chain(&a.channel).map(String::as_str).collect();
    check_distinct(a.out.as_deref(), &inputs)?;
    if let Some(spec) = &a.povm {
        let p = io::load_povm(spec)?;
        let report = p.validate(a.tol);
        let value = json!({
            "kind": "povm",
            "dim": p.dim(),
            "outcomes": p.outcomes(),
            "valid": report.valid,
            "incoherent": p.is_incoherent(a.tol),
            "completeness_residual": report.completeness_residual,
            "psd_margins": report.psd_margins,
            "tolerance": a.tol,
        });
        write_json(a.out.as_deref(), &value)?;
        return Ok(report
            .into_result()
            .err()
            .map(|e| CliError::Validation(format!("invalid measurement: {e}"))));
    }
    let spec = a.channel.as_deref().expect("clap requires one input");
    // completeness is reported below, not enforced while loading
    let c = io::load_channel(spec, a.dim as usize, f64::INFINITY)?;
    let residual = c.completeness_residual();
    let valid = residual <= a.tol;
    let sio = c.classify_sio(a.tol);
    let value = json!({
        "kind": "channel",
        "dim": c.dim(),
        "operators": c.len(),
        "valid": valid,
        "completeness_residual": residual,
        "sio": sio.is_some(),
        "permutations": sio.map(|s| s.permutations),
        "tolerance": a.tol,
    });
    write_json(a.out.as_deref(), &value)?;
    Ok((!valid).then(|| CliError::Validation(format!("channel completeness residual {residual:e} exceeds {}", a.tol))))
}

fn monotone(a: MonotoneArgs) -> Outcome {
    check_distinct(a.out.as_deref(), &[&a.povm])?;
    let p = load_valid_povm(&a.povm, a.tol)?;
    let (value, soft) = match a.which {
        Which::Linf => {
            let r = c_linf(&p);
            (json!({ "which": "linf", "value": r.value, "argmax_pair": r.pair }), None)
        }
        Which::L1 => {
            let v = c_l1(&p);
            (json!({ "which": "l1", "value": v, "half": v / 2.0 }), None)
        }
        Which::Cs | Which::Tv => {
            let name = if a.which == Which::Cs { "cs" } else { "tv" };
            let config = BracketConfig {
                gap_tol: a.gap_tol,
                max_iterations: a.max_iter as usize,
                seed: a.seed,
                ..BracketConfig::default()
            };
            let b = distance_monotone(&p, &Distance::from_name(name)?, &config)?;
            let soft = (!b.converged).then(|| {
                CliError::Convergence(format!(
                    "bracket [{}, {}] still wider than {} after {} iterations",
                    b.lower, b.upper, a.gap_tol, b.iterations
                ))
            });
            let value = json!({
                "which": name,
                "bracket": [b.lower, b.upper],
                "converged": b.converged,
                "iterations": b.iterations,
                "gap_tol": a.gap_tol,
                "witness": {
                    "state": hermitian_to_json(b.witness_state.matrix()),
                    "incoherent_povm": PovmJson::from_povm(&b.witness_incoherent_povm),
                },
            });
            (value, soft)
        }
    };
    write_json(a.out.as_deref(), &value)?;
    Ok(soft)
}

fn robustness_cmd(a: RobustnessArgs) -> Outcome {
    check_distinct(a.out.as_deref(), &[&a.povm])?;
    let p = load_valid_povm(&a.povm, DEFAULT_TOLERANCE)?;
    let mut problem = RobustnessProblem::new(p.clone())
        .with_tolerance(a.tol)
        .with_max_iterations(a.max_iter as usize);
    if let Some(s) = a.seed {
        problem = problem.with_seed(s);
    }
    let sol = robustness(&problem)?;
    let mut value = json!({
        "value": sol.value,
        "dual_value": sol.dual_value,
        "gap": sol.duality_gap,
        "status": sol.status.as_str(),
        "iterations": sol.iterations,
        "tolerance": a.tol,
    });
    if a.emit_witness {
        let pair = c_linf(&p)
            .pair
            .map(|(i, j)| dual_witness_from_pair(&p, i, j))
            .transpose()?
            .map(|w| {
                json!({
                    "i": w.i,
                    "j": w.j,
                    "bound": w.bound,
                    "sigma": w.sigma,
                    "matrices": w.matrices.iter().map(hermitian_to_json).collect::<Vec<_>>(),
                })
            });
        value["witness"] = json!({
            "primal_diagonals": sol.primal_diagonals,
            "mixing_povm": sol.mixing_povm(&p, a.tol).map(|m| PovmJson::from_povm(&m)),
            "sigma": sol.sigma,
            "dual_matrices": sol.dual_matrices.iter().map(hermitian_to_json).collect::<Vec<_>>(),
            "pair": pair,
        });
    }
    write_json(a.out.as_deref(), &value)?;
    Ok((sol.status != SolveStatus::Optimal).then(|| {
        CliError::Convergence(format!(
            "solver stopped with status {} and gap {:e} after {} iterations",
            sol.status.as_str(),
            sol.duality_gap,
            sol.iterations
        ))
    }))
}

fn channel_apply(a: ChannelApplyArgs) -> Outcome {
    check_distinct(a.out.as_deref(), &[&a.povm, &a.channel])?;
    let p = load_valid_povm(&a.povm, a.tol)?;
    let c = io::load_channel(&a.channel, p.dim(), a.tol)?;
    let out = if a.selective {
        let q = c.dual_apply_selective(&p)?;
        PovmJson::from_povm(&q).with_labels(selective_labels(p.outcomes(), c.len()))
    } else {
        PovmJson::from_povm(&c.dual_apply_nonselective(&p)?)
    };
    write_json(a.out.as_deref(), &serde_json::to_value(out).expect("serializable"))?;
    Ok(None)
}

fn reconstruct(a: ReconstructArgs) -> Outcome {
    let counts_path = a.counts.to_string_lossy().into_owned();
    check_distinct(a.out.as_deref(), &[&counts_path])?;
    let counts: CountsJson = io::read_json(&a.counts)?;
    let rec = counts.to_record()?;
    let report = coherence_from_counts(&rec, a.tol)?;
    let recon = &report.reconstruction;
    let mut value = json!({
        "dim": rec.dim(),
        "outcomes": rec.outcomes(),
        "shots": counts.shots,
        "runs": report.runs,
        "povm": PovmJson::from_povm(&recon.povm),
        "psd_margins": recon.psd_margins,
        "psd_violated": recon.psd_violated(0.0),
        "completeness_residual": recon.completeness_residual,
        "c_linf": stats_json(&report.c_linf),
        "c_l1_half": stats_json(&report.c_l1_half),
        "robustness": stats_json(&report.robustness),
    });
    if a.project_psd {
        let projected = recon.project_psd()?;
        value["post_processing"] = json!("psd-projection");
        value["projected_povm"] = serde_json::to_value(PovmJson::from_povm(&projected)).expect("serializable");
    }
    write_json(a.out.as_deref(), &value)?;
    Ok(None)
}

fn counts_file_name(path: &str, index: usize) -> String {
    format!("{path}_{index:03}.json")
}

/// Runs directions on `jobs` threads; results are sorted by index.
fn run_directions(spec: &SweepSpec, jobs: usize) -> Result<Vec<DirectionResult>> {
    spec.validate()?;
    let params = spec.parameters();
    let jobs = jobs.clamp(1, params.len().max(1));
    let mut results: Vec<(usize, povm_coherence::Result<DirectionResult>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                let params = &params;
                scope.spawn(move || {
                    (w..params.len())
                        .step_by(jobs)
                        .map(|i| (i, run_direction(spec, i, params[i])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    results.sort_by_key(|(i, _)| *i);
    Ok(results.into_iter().map(|(_, r)| r).collect::<povm_coherence::Result<Vec<_>>>()?)
}

fn sweep(a: SweepArgs) -> Outcome {
    let inputs: Vec<&str> = a.noise.iter().map(String::as_str).collect();
    check_distinct(a.out.as_deref(), &inputs)?;
    if a.exact && a.counts_dir.is_some() {
        return Err(CliError::usage("--counts-dir needs sampled counts; drop --exact"));
    }
    let mut spec = SweepSpec::new(SweepPath::from_name(&a.path)?);
    spec.step = a.step;
    spec.shots = a.shots;
    spec.runs = a.runs as usize;
    spec.seed = a.seed;
    spec.exact = a.exact;
    spec.noise = a
        .noise
        .as_deref()
        .map(|n| io::load_channel(n, 2, DEFAULT_TOLERANCE))
        .transpose()?;
    let results = run_directions(&spec, a.jobs as usize)?;

    if let Some(dir) = &a.counts_dir {
        fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.clone(),
            source,
        })?;
        for r in &results {
            let counts = CountsJson::from_record(&r.record).expect("sampled record");
            let path = dir.join(counts_file_name(&a.path, r.row.index));
            io::emit_text(Some(&path), &io::to_pretty(&counts))?;
        }
    }
    let rows: Vec<_> = results.into_iter().map(|r| r.row).collect();
    let format = a.format.unwrap_or_else(|| Format::from_path(a.out.as_deref()));
    emit_plot_data(&Table::sweep(&rows), format, a.out.as_deref())?;
    Ok(None)
}

fn fig2(a: Fig2Args) -> Outcome {
    let rows = run_fig2_sweep(&default_gamma_grid(a.grid as usize), a.tol)?;
    let format = a.format.unwrap_or_else(|| Format::from_path(a.out.as_deref()));
    emit_plot_data(&Table::fig2(&rows), format, a.out.as_deref())?;
    let stalled: Vec<String> = rows
        .iter()
        .filter(|r| r.status != SolveStatus::Optimal)
        .map(|r| r.gamma.to_string())
        .collect();
    Ok((!stalled.is_empty())
        .then(|| CliError::Convergence(format!("SDP did not reach the gap target at gamma = {}", stalled.join(", ")))))
}
