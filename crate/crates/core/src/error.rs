use crate::prelude::*;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian: entry ({row}, {col}) deviates from its mirror by {asymmetry:e}")]
    NotHermitian { row: usize, col: usize, asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} must be at least 1")]
    Empty { what: &'static str },

    #[error("{what} = {value} is outside {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("component {index} is not positive semidefinite (smallest eigenvalue {eigenvalue:e})")]
    NotPositive { index: usize, eigenvalue: f64 },

    #[error("completeness violated: residual {residual:e}")]
    Incomplete { residual: f64 },

    #[error("density matrix trace is {trace}, expected 1")]
    BadTrace { trace: f64 },

    #[error("probability for outcome {outcome} is {value:e}")]
    NegativeProbability { outcome: usize, value: f64 },

    #[error("operation requires a qubit (dim 2), got dim {dim}")]
    NotQubit { dim: usize },

    #[error("unknown statistical distance `{0}`")]
    UnknownDistance(String),

    #[error("tomography record has no row for probe ({k}, {l})")]
    MissingProbe { k: usize, l: usize },

    #[error("row for probe {probe} has {found} entries, expected {expected}")]
    BadRow {
        probe: String,
        expected: usize,
        found: usize,
    },

    #[error("probe states are linearly dependent: condition number {condition:e}, weakest direction along chi component ({q}, {r})")]
    SingularProbes { condition: f64, q: usize, r: usize },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
