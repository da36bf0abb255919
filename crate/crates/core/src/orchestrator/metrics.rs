use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "s")]
    S,
    #[serde(rename = "ns")]
    Ns,
    #[serde(rename = "m")]
    M,
    #[serde(rename = "W")]
    W,
    #[serde(rename = "Wh")]
    Wh,
    #[serde(rename = "J")]
    J,
    #[serde(rename = "dB")]
    Db,
    #[serde(rename = "ratio")]
    Ratio,
    #[serde(rename = "count")]
    Count,
}

/// One row of experiment output. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub run_id: String,
    pub seed: u64,
    pub experiment: String,
    pub metric: String,
    pub value: f64,
    pub unit: Unit,
    pub sim_time_ps: i64,
}

pub const CSV_HEADER: &str = "run_id,seed,experiment,metric,value,unit,sim_time_ps";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

pub fn to_csv(records: &[MetricRecord]) -> io::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let mut out = Vec::new();
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        w.serialize(r).map_err(io::Error::other)?;
    }
    out.extend(w.into_inner().map_err(|e| io::Error::other(e.to_string()))?);
    Ok(out)
}

pub fn to_jsonl(records: &[MetricRecord]) -> io::Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn encode(records: &[MetricRecord], format: Format) -> io::Result<Vec<u8>> {
    match format {
        Format::Csv => to_csv(records),
        Format::Jsonl => to_jsonl(records),
    }
}

/// Writes `metrics.<ext>` into `dir`, creating the directory.
pub fn emit(records: &[MetricRecord], format: Format, dir: &Path) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("metrics.{}", format.extension()));
    fs::write(&path, encode(records, format)?)?;
    Ok(path)
}

pub fn read_csv(bytes: &[u8]) -> Result<Vec<MetricRecord>, csv::Error> {
    csv::Reader::from_reader(bytes).deserialize().collect()
}

pub fn read_jsonl(bytes: &[u8]) -> serde_json::Result<Vec<MetricRecord>> {
    bytes
        .split(|&b| b == b'\n')
        .filter(|l| !l.is_empty())
        .map(serde_json::from_slice)
        .collect()
}
