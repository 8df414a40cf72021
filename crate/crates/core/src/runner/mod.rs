//! Batch runs from a JSON configuration: one case per document, artifacts
//! written as field CSVs plus a JSON report.
//!
//! Exit codes: parse 2, validation 3, solver 4, oracle mismatch 5, I/O 1.

mod cases;
mod config;
mod output;
mod tabulated;

use std::path::PathBuf;

pub use cases::run_case;
pub use config::{
    parse_config, parse_config_str, CaseKind, DataSpec, FieldSpec, GridSpec, OperatorSpec, OutputSpec,
    PerronSpec, RunConfig, SolverMethod, SolverSpec, TransformSpec, VerifySpec,
};
pub use output::{write_outputs, NamedField};
pub use tabulated::TabulatedCoefficients;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("parse error {0}")]
    Parse(String),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("solver error: {0}")]
    Solver(#[from] crate::Error),
    #[error("oracle mismatch:\n  {}", .0.join("\n  "))]
    OracleMismatch(Vec<String>),
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Io(_) => 1,
            RunError::Parse(_) => 2,
            RunError::Validation(_) => 3,
            RunError::Solver(_) => 4,
            RunError::OracleMismatch(_) => 5,
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

impl From<csv::Error> for RunError {
    fn from(e: csv::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Treat every invariant check as an oracle: failures exit with code 5.
    pub acceptance: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("out"),
            seed: 0,
            acceptance: false,
        }
    }
}

/// What a finished case produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub report: serde_json::Value,
    pub artifacts: Vec<PathBuf>,
}
