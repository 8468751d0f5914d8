//! Result files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::run::{Cell, Outcome, Table};

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub seed: u64,
    pub config_hash: String,
    pub config: Value,
    pub files: Vec<FileEntry>,
    pub verdicts: std::collections::BTreeMap<String, Value>,
    pub timings_ms: std::collections::BTreeMap<String, f64>,
    pub started_unix: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Canonical bytes of a parsed config: keys in declaration order, defaults filled in.
pub fn canonical_config(config: &ExperimentConfig) -> Vec<u8> {
    serde_json::to_vec(config).expect("config serializes")
}

fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn csv_bytes(t: &Table) -> std::io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&t.header)?;
    for row in &t.rows {
        let cells = row.iter().map(|c| match c {
            Cell::F(v) => format_float(*v),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        });
        w.write_record(cells)?;
    }
    w.into_inner().map_err(|e| e.into_error())
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("json serializes");
    b.push(b'\n');
    b
}

/// Write result, tables and manifest into `dir`; returns the manifest path.
pub fn write_outputs(dir: &Path, config: &ExperimentConfig, outcome: &Outcome, started: SystemTime) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut payloads: Vec<(&str, Vec<u8>)> = vec![("result.json", json_bytes(&outcome.result))];
    if let Some(t) = &outcome.timeseries {
        payloads.push(("timeseries.csv", csv_bytes(t)?));
    }
    if let Some(t) = &outcome.distance_log {
        payloads.push(("distance_log.csv", csv_bytes(t)?));
    }
    let mut files = Vec::new();
    for (name, bytes) in payloads {
        fs::write(dir.join(name), &bytes)?;
        files.push(FileEntry { name: name.to_string(), bytes: bytes.len(), sha256: sha256_hex(&bytes) });
    }
    let canonical = canonical_config(config);
    let manifest = RunManifest {
        tool: "qbsde",
        version: env!("CARGO_PKG_VERSION"),
        experiment: config.experiment.kind(),
        name: config.name.clone(),
        seed: config.seed,
        config_hash: sha256_hex(&canonical),
        config: serde_json::from_slice(&canonical).expect("canonical config parses"),
        files,
        verdicts: outcome.verdicts.clone(),
        timings_ms: outcome.timings.clone(),
        started_unix: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    let path = dir.join("manifest.json");
    fs::write(&path, json_bytes(&manifest))?;
    Ok(path)
}
