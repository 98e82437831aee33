use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use rydberg_qubo::hardness::fmt_num;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::exit::{Exit, WithCode};

/// Everything that determines a run's numeric output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub instance: String,
    pub mode: String,
    pub seed: u64,
    pub config: Value,
}

impl RunManifest {
    pub fn new(command: &str, instance: &str, mode: &str, seed: u64, config: Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            instance: instance.to_string(),
            mode: mode.to_string(),
            seed,
            config,
        }
    }

    /// Hex SHA-256 of the canonical JSON form (sorted keys).
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("manifest serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn envelope(&self) -> Value {
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        json!({ "manifest": self, "hash": self.hash(), "created_unix": created })
    }
}

pub struct Output {
    pub dir: PathBuf,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self, Exit> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .code(1)?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn path(&self, explicit: Option<&PathBuf>, default_name: &str) -> PathBuf {
        explicit
            .cloned()
            .unwrap_or_else(|| self.dir.join(default_name))
    }
}

/// Writes `{ "manifest": ..., <key>: value, ... }` as pretty JSON.
pub fn write_json(
    path: &Path,
    manifest: &RunManifest,
    fields: Vec<(&str, Value)>,
) -> Result<(), Exit> {
    let mut obj = serde_json::Map::new();
    obj.insert("manifest".into(), manifest.envelope());
    for (k, v) in fields {
        obj.insert(k.into(), v);
    }
    let text = serde_json::to_string_pretty(&Value::Object(obj)).expect("json");
    fs::write(path, text + "\n")
        .with_context(|| format!("writing {}", path.display()))
        .code(1)
}

/// CSV with a leading `# manifest=<hash>` line.
pub fn write_csv(
    path: &Path,
    manifest: &RunManifest,
    header: &[String],
    rows: &[Vec<String>],
) -> Result<(), Exit> {
    let text = csv_text(header, rows);
    let body = format!("# manifest={}\n{}", manifest.hash(), text);
    fs::write(path, body)
        .with_context(|| format!("writing {}", path.display()))
        .code(1)
}

pub fn csv_text(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

pub fn num(v: f64) -> String {
    fmt_num(v)
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}
