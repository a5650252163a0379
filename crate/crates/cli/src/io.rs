//! JSON file formats. Complex entries are `[re, im]` pairs and matrices are
//! lists of rows.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use povm_coherence::builtins::{named_channel, named_povm};
use povm_coherence::channels::KrausChannel;
use povm_coherence::tomography::{ProbeLabel, RecordData, TomographyRecord};
use povm_coherence::{GeneralMatrix, HermitianMatrix, Povm, C64};

use crate::error::{CliError, Result};

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmJson {
    pub dim: usize,
    pub outcomes: usize,
    pub components: Vec<MatrixJson>,
    /// Outcome names, written for selective expansions (`"a:mu"`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelJson {
    pub dim: usize,
    pub operators: Vec<MatrixJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsJson {
    pub dim: usize,
    pub outcomes: usize,
    pub shots: u64,
    pub runs: usize,
    /// Probe label `"k,l"` to per-run outcome counts.
    pub table: BTreeMap<String, Vec<Vec<u64>>>,
}

fn entries_to_json(dim: usize, data: &[C64]) -> MatrixJson {
    data.chunks(dim).map(|row| row.iter().map(|z| [z.re, z.im]).collect()).collect()
}

pub fn hermitian_to_json(m: &HermitianMatrix) -> MatrixJson {
    entries_to_json(m.dim(), m.as_slice())
}

pub fn general_to_json(m: &GeneralMatrix) -> MatrixJson {
    entries_to_json(m.dim(), m.as_slice())
}

fn matrix_entries(m: &MatrixJson, dim: usize, what: &str) -> Result<Vec<C64>> {
    if m.len() != dim || m.iter().any(|row| row.len() != dim) {
        return Err(CliError::usage(format!("{what} is not a {dim}x{dim} matrix")));
    }
    Ok(m.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect())
}

impl PovmJson {
    pub fn from_povm(p: &Povm) -> Self {
        Self {
            dim: p.dim(),
            outcomes: p.outcomes(),
            components: p.components().iter().map(hermitian_to_json).collect(),
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }

    /// Checks shapes and Hermiticity only; positivity and completeness are
    /// left to the caller.
    pub fn to_povm(&self) -> Result<Povm> {
        if self.components.len() != self.outcomes {
            return Err(CliError::usage(format!(
                "`outcomes` is {} but {} components are listed",
                self.outcomes,
                self.components.len()
            )));
        }
        if self.dim == 0 {
            return Err(CliError::usage("`dim` must be positive"));
        }
        let comps = self
            .components
            .iter()
            .enumerate()
            .map(|(a, m)| {
                let data = matrix_entries(m, self.dim, &format!("component {a}"))?;
                Ok(HermitianMatrix::new(self.dim, data)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Povm::new(comps)?)
    }
}

impl ChannelJson {
    pub fn from_channel(c: &KrausChannel) -> Self {
        Self {
            dim: c.dim(),
            operators: c.operators().iter().map(general_to_json).collect(),
        }
    }

    pub fn to_channel(&self, tol: f64) -> Result<KrausChannel> {
        let ops = self
            .operators
            .iter()
            .enumerate()
            .map(|(mu, m)| {
                let data = matrix_entries(m, self.dim, &format!("operator {mu}"))?;
                Ok(GeneralMatrix::new(self.dim, data)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(KrausChannel::new(ops, tol)?)
    }
}

impl CountsJson {
    /// `None` for records holding exact probabilities.
    pub fn from_record(rec: &TomographyRecord) -> Option<Self> {
        match rec.data() {
            RecordData::Counts { shots, table } => Some(Self {
                dim: rec.dim(),
                outcomes: rec.outcomes(),
                shots: *shots,
                runs: rec.runs(),
                table: table.iter().map(|(label, runs)| (label.to_string(), runs.clone())).collect(),
            }),
            RecordData::Probabilities(_) => None,
        }
    }

    pub fn to_record(&self) -> Result<TomographyRecord> {
        let mut table = BTreeMap::new();
        for (key, per_run) in &self.table {
            let label = ProbeLabel::parse(key)?;
            if per_run.len() != self.runs {
                return Err(CliError::usage(format!(
                    "probe {key} lists {} runs but `runs` is {}",
                    per_run.len(),
                    self.runs
                )));
            }
            if table.insert(label, per_run.clone()).is_some() {
                return Err(CliError::usage(format!("probe {key} appears twice")));
            }
        }
        Ok(TomographyRecord::from_counts(self.dim, self.outcomes, self.shots, table)?)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub fn to_pretty(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// A file path if one exists, otherwise a builtin name.
pub fn load_povm(spec: &str) -> Result<Povm> {
    let path = PathBuf::from(spec);
    if path.is_file() {
        return read_json::<PovmJson>(&path)?.to_povm();
    }
    match named_povm(spec) {
        Some(p) => Ok(p?),
        None => Err(CliError::usage(format!("`{spec}` is neither a file nor a builtin measurement"))),
    }
}

/// A file path if one exists, otherwise a builtin name resolved for `dim`.
pub fn load_channel(spec: &str, dim: usize, tol: f64) -> Result<KrausChannel> {
    let path = PathBuf::from(spec);
    if path.is_file() {
        return read_json::<ChannelJson>(&path)?.to_channel(tol);
    }
    match named_channel(spec, dim) {
        Some(c) => Ok(c?),
        None => Err(CliError::usage(format!("`{spec}` is neither a file nor a builtin channel"))),
    }
}
