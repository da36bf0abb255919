//! Scenario files, experiment runs, sweeps and metric output.
//!
//! A scenario is a TOML document with one table per subsystem plus an
//! `[experiment]` table naming what to run. Every key has a default except
//! `experiment.kind`; unknown keys are rejected.

mod defaults;
mod metrics;
mod run;
mod scenario;
mod sweep;

pub use defaults::{audit_defaults, provenance, AuditLine, AuditMismatch, DefaultEntry, Provenance, DEFAULTS};
pub use metrics::{emit, encode, read_csv, read_jsonl, to_csv, to_jsonl, Format, MetricRecord, Unit, CSV_HEADER};
pub use run::{headline_metric, run, sync_config, RunReport};
pub use scenario::{
    from_value, parse_scenario, BeaconSpec, ChannelChoice, DaqSection, ExperimentKind, ExperimentSection, NlosSpec,
    PhySection, PositioningSection, PowerSection, RoomSection, RoverSection, Scenario, SyncSection,
    TechnologyChoice, TilesSection, TopologyChoice, TopologySection,
};
pub use sweep::{sweep, sweep_csv, sweep_rows, with_parameter, SweepError, SweepRow, SweepRun};

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("unknown key `{path}`")]
    UnknownKey { path: String },
    #[error("missing required key `{path}`")]
    MissingKey { path: String },
    #[error("`{path}`: {message}")]
    CrossRef { path: String, message: String },
    #[error("`{path}`: {message}")]
    Range { path: String, message: String },
    #[error("`{path}` is not a numeric scenario parameter")]
    UnknownParameter { path: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{experiment} run with seed {seed} failed: {message}")]
pub struct RunError {
    pub experiment: &'static str,
    pub seed: u64,
    pub message: String,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_scenario(&text)
}
