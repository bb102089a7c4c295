//! Scenario files, end-to-end runs and the command-line front end.

pub mod cli;
mod output;
mod run;
mod scenario;

use std::path::Path;

use thiserror::Error;

pub use output::{csv_header, write_artifacts, write_csv, Artifacts};
pub use run::{
    budget_at, passes_for, run_scenario, tx_power_at, LinkStatus, MarginStats, PatColumns, RunError,
    RunOutput, RunSummary, StatusCounts, StepRecord,
};
pub use scenario::{
    parse_scenario, Basis, PatSetup, Provenance, Scenario, ScenarioConfig, ScenarioKind, SourceConfig,
    TerminalSpec,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read scenario file {path}: {message}")]
    Io { path: String, message: String },
    #[error("syntax error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Syntax { line: Option<usize>, message: String },
    #[error("invalid {field}: {reason}")]
    Semantic { field: String, reason: String },
}

/// Read and parse a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scenario(&text)
}
