use std::path::PathBuf;

use serde_json::json;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_CONVERGENCE: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Convergence(String),

    #[error(transparent)]
    Core(#[from] povm_coherence::Error),

    #[error("cannot read `{}`: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },

    #[error("malformed `{}`: {source}", path.display())]
    Parse { path: PathBuf, source: serde_json::Error },

    #[error("cannot write `{}`: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn kind(&self) -> &'static str {
        use povm_coherence::Error as E;
        match self {
            CliError::Usage(_) | CliError::Read { .. } | CliError::Parse { .. } => "usage",
            CliError::Validation(_) => "validation",
            CliError::Convergence(_) => "convergence",
            CliError::Write { .. } | CliError::Csv(_) => "io",
            CliError::Core(e) => match e {
                E::NotHermitian { .. }
                | E::NotPositive { .. }
                | E::Incomplete { .. }
                | E::BadTrace { .. }
                | E::NegativeProbability { .. }
                | E::NotQubit { .. }
                | E::SingularProbes { .. } => "validation",
                _ => "usage",
            },
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind() {
            "usage" => EXIT_USAGE,
            "convergence" => EXIT_CONVERGENCE,
            _ => EXIT_VALIDATION,
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "error": {
                "kind": self.kind(),
                "code": self.exit_code(),
                "message": self.to_string(),
            }
        })
    }
}
