//! In-memory artifacts written in one go, so a failed run leaves no partial output.

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Shortest round-trip text of a float.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn complex_json(z: borel_unfold::C64) -> Value {
    json!([z.re, z.im])
}

#[derive(Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add_csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    pub fn add_json(&mut self, name: &str, value: &Value) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("JSON values serialize");
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
    }

    /// Writes every file and a manifest.json listing each with its SHA-256.
    pub fn write(self, dir: &Path, command: &str, meta: Map<String, Value>) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        let mut listed = Vec::new();
        for (name, bytes) in &self.files {
            fs::write(dir.join(name), bytes)?;
            listed.push(json!({ "name": name, "bytes": bytes.len(), "sha256": sha256_hex(bytes) }));
        }
        let mut manifest = meta;
        manifest.insert("command".into(), json!(command));
        manifest.insert("files".into(), Value::Array(listed));
        manifest.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        let mut bytes = serde_json::to_vec_pretty(&Value::Object(manifest)).expect("JSON values serialize");
        bytes.push(b'\n');
        fs::write(dir.join("manifest.json"), bytes)?;
        Ok(())
    }
}
