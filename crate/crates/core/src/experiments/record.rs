use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::config::ExperimentConfig;

/// Current record schema. Records of the previous version are still read.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    /// A checked property failed or a quadrature missed its tolerance.
    ToleranceFailure,
    BudgetExhausted,
}

/// Empirical stand-ins for the non-explicit exponents.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Exponents {
    /// Slope of `ln deviation` against `ln T` (continuous or sparse averages).
    pub average_slope: Option<f64>,
    /// Slope of `ln gap` against `ln M` for the blocks.
    pub block_slope: Option<f64>,
    /// Slope of `ln |correlation|` against `t`.
    pub mixing_slope: Option<f64>,
}

impl Exponents {
    /// Non-rigorous stand-in for the threshold exponent: the product of the
    /// fitted decay rates `(-average_slope) * (-block_slope)`, when both exist.
    pub fn gamma0_surrogate(&self) -> Option<f64> {
        Some(self.average_slope? * self.block_slope?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub os: String,
    pub arch: String,
    pub available_cpus: usize,
    pub workers: usize,
    pub optimized: bool,
}

impl Environment {
    pub fn capture(workers: usize) -> Self {
        Environment {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            available_cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            workers,
            optimized: !cfg!(debug_assertions),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    #[serde(default)]
    pub schema_version: u32,
    pub kind: String,
    /// SHA-256 of the canonical JSON of `config`.
    pub config_hash: String,
    /// SHA-256 over `record <len>\0<payload>`.
    pub content_id: String,
    pub started: String,
    pub finished: String,
    pub runtime_s: f64,
    pub status: RunStatus,
    pub payload: Value,
    #[serde(default)]
    pub exponents: Exponents,
    pub environment: Environment,
    pub config: ExperimentConfig,
}

fn hex_sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let canonical = serde_json::to_string(config).map_err(|e| Error::Io(e.to_string()))?;
    Ok(hex_sha256(canonical.as_bytes()))
}

pub fn content_id(payload: &Value) -> String {
    let body = payload.to_string();
    let mut bytes = format!("record {}\0", body.len()).into_bytes();
    bytes.extend_from_slice(body.as_bytes());
    hex_sha256(&bytes)
}

/// Drops wall-clock fields so that payloads of reruns compare equal.
pub(crate) fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("runtime_s");
            for x in map.values_mut() {
                strip_timing(x);
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

impl ResultRecord {
    /// Checks the schema version and that the hash matches the embedded config.
    pub fn verify(&self) -> Result<()> {
        if self.schema_version + 1 < SCHEMA_VERSION || self.schema_version > SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported record schema {}", self.schema_version)));
        }
        if config_hash(&self.config)? != self.config_hash {
            return Err(Error::Config("record config hash does not match its config".into()));
        }
        if content_id(&self.payload) != self.content_id {
            return Err(Error::Config("record content id does not match its payload".into()));
        }
        Ok(())
    }
}

/// Appends one record as a JSON line.
pub fn append_record(path: &Path, record: &ResultRecord) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let line = serde_json::to_string(record).map_err(|e| Error::Io(e.to_string()))?;
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(f, "{line}")?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>> {
    let f = fs::File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: ResultRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Config(format!("{} line {}: {e}", path.display(), i + 1)))?;
        r.verify()?;
        out.push(r);
    }
    Ok(out)
}

/// Numeric table written as CSV and as a gnuplot data file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Writes `<stem>.csv` and `<stem>.dat` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let mut w = csv::Writer::from_path(&csv_path).map_err(|e| Error::Io(e.to_string()))?;
        w.write_record(&self.header).map_err(|e| Error::Io(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string())).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        let dat_path = dir.join(format!("{stem}.dat"));
        let mut text = format!("# {}\n# {}\n", self.name, self.header.join(" "));
        for r in &self.rows {
            let cols: Vec<String> = r.iter().map(|v| format!("{v:.17e}")).collect();
            text.push_str(&cols.join(" "));
            text.push('\n');
        }
        fs::write(&dat_path, text)?;
        Ok(vec![csv_path, dat_path])
    }
}
