use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::Unit;
use super::run::{headline_metric, run, RunReport};
use super::scenario::{from_value, Scenario};
use super::{RunError, ScenarioError};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub value: f64,
    pub report: RunReport,
}

/// One line of the tidy sweep table, keyed by `(value, seed)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub seed: u64,
    pub run_id: String,
    pub experiment: String,
    pub metric: String,
    pub metric_value: f64,
    pub unit: Option<Unit>,
    pub trace_hash: String,
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Run(#[from] RunError),
}

/// Scenario with the numeric parameter at `path` replaced by `value`.
/// Paths use dots between keys and `[i]` for array elements.
pub fn with_parameter(scenario: &Scenario, path: &str, value: f64) -> Result<Scenario, ScenarioError> {
    let mut root = toml::Value::try_from(scenario).expect("scenario serializes");
    let unknown = || ScenarioError::UnknownParameter { path: path.to_string() };
    let mut node = &mut root;
    for segment in path.split('.') {
        let (key, indices) = split_indices(segment).ok_or_else(unknown)?;
        node = node.as_table_mut().and_then(|t| t.get_mut(key)).ok_or_else(unknown)?;
        for i in indices {
            node = node.as_array_mut().and_then(|a| a.get_mut(i)).ok_or_else(unknown)?;
        }
    }
    *node = match node {
        toml::Value::Integer(_) if value.fract() == 0.0 && value.abs() < 9.0e15 => toml::Value::Integer(value as i64),
        toml::Value::Integer(_) => {
            return Err(ScenarioError::Range { path: path.to_string(), message: format!("expects an integer, got {value}") })
        }
        toml::Value::Float(_) => toml::Value::Float(value),
        _ => return Err(unknown()),
    };
    from_value(root)
}

fn split_indices(segment: &str) -> Option<(&str, Vec<usize>)> {
    let mut parts = segment.split('[');
    let key = parts.next()?;
    let indices = parts
        .map(|p| p.strip_suffix(']').and_then(|n| n.parse().ok()))
        .collect::<Option<Vec<usize>>>()?;
    (!key.is_empty()).then_some((key, indices))
}

/// One run per value per scenario seed. Runs execute in parallel; the
/// result order is by value, then seed.
pub fn sweep(scenario: &Scenario, path: &str, values: &[f64]) -> Result<Vec<SweepRun>, SweepError> {
    let variants = values
        .iter()
        .map(|&v| with_parameter(scenario, path, v).map(|s| (v, s)))
        .collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(f64, &Scenario, u64)> = variants
        .iter()
        .flat_map(|(v, s)| s.experiment.seeds.iter().map(move |&seed| (*v, s, seed)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(value, s, seed)| run(s, seed).map(|report| SweepRun { value, report }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(runs)
}

pub fn sweep_rows(path: &str, runs: &[SweepRun]) -> Vec<SweepRow> {
    runs.iter()
        .map(|r| {
            let name = headline_metric(r.report.experiment);
            let record = r.report.records.iter().find(|m| m.metric == name);
            SweepRow {
                parameter: path.to_string(),
                value: r.value,
                seed: r.report.seed,
                run_id: r.report.run_id.clone(),
                experiment: r.report.experiment.as_str().to_string(),
                metric: name.to_string(),
                metric_value: record.map_or(f64::NAN, |m| m.value),
                unit: record.map(|m| m.unit),
                trace_hash: r.report.trace_hash.clone(),
            }
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> std::io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(["parameter", "value", "seed", "run_id", "experiment", "metric", "metric_value", "unit", "trace_hash"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))
}
