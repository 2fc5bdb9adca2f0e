//! CSV and manifest writing. Every CSV starts with a `schema_version`
//! column; every output directory gets a `manifest.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

pub const CSV_SCHEMA_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

/// Read an input file. A missing or unreadable input is a configuration
/// error.
pub fn read_input(path: &Path, role: &str) -> Result<(Vec<u8>, InputDigest), Failure> {
    let bytes = std::fs::read(path)
        .map_err(|e| Failure::Config(format!("cannot read {role} {}: {e}", path.display())))?;
    let digest = InputDigest {
        role: role.to_string(),
        path: path.to_path_buf(),
        sha256: sha256_hex(&bytes),
    };
    Ok((bytes, digest))
}

pub fn read_input_text(path: &Path, role: &str) -> Result<(String, InputDigest), Failure> {
    let (bytes, d) = read_input(path, role)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Failure::Config(format!("{role} {} is not UTF-8", path.display())))?;
    Ok((text, d))
}

/// Everything needed to rerun a job: the exact inputs (with hashes), the
/// command line and the effective overrides.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub inputs: Vec<InputDigest>,
    /// Verbatim config text.
    pub config: Option<String>,
    pub seeds: Vec<u64>,
    pub settings: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub started_unix_s: u64,
    pub finished_unix_s: u64,
    pub provenance: String,
}

impl Manifest {
    pub fn start(command: &str) -> Self {
        Self {
            tool: "fdsim",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            argv: std::env::args().collect(),
            inputs: Vec::new(),
            config: None,
            seeds: Vec::new(),
            settings: BTreeMap::new(),
            outputs: Vec::new(),
            started_unix_s: unix_now(),
            finished_unix_s: 0,
            provenance: String::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.settings.insert(key.to_string(), value.to_string());
    }

    pub fn write(mut self, path: &Path) -> Result<(), Failure> {
        self.finished_unix_s = unix_now();
        let cfg = self
            .inputs
            .iter()
            .find(|d| d.role == "config")
            .or(self.inputs.first())
            .map_or("none".to_string(), |d| d.sha256[..12].to_string());
        self.provenance = format!("fdsim {} {} config:{cfg}", self.version, self.command);
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|e| write_err(path, e))
    }
}

pub fn write_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(format!("cannot write {}: {e}", path.display()))
}

pub fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| write_err(dir, e))
}

/// Write `rows` under `header`, prefixing the schema version to each.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| write_err(path, e))?;
    let mut h = vec!["schema_version"];
    h.extend_from_slice(header);
    w.write_record(&h).map_err(|e| write_err(path, e))?;
    let v = CSV_SCHEMA_VERSION.to_string();
    for r in rows {
        debug_assert_eq!(r.len(), header.len());
        w.write_record(std::iter::once(&v).chain(r)).map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|e| write_err(path, e))
}

/// Shortest round-trip decimal form; `inf` for infinities.
pub fn num(x: f64) -> String {
    x.to_string()
}

/// Coherence time column: milliseconds to 0.01 ms, `inf` when static.
pub fn coherence_ms(t_s: f64) -> String {
    if t_s.is_infinite() {
        "inf".into()
    } else {
        format!("{:.2}", t_s * 1e3)
    }
}
