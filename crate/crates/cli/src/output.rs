//! Run headers, config hashing and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::failure::Failure;

pub const SCHEMA: &str = "v1";
pub const DEFAULT_GRID: usize = 1024;
pub const DEFAULT_ANGULAR: usize = 512;
pub const DEFAULT_SEED: u64 = 42;

/// Fully resolved inputs of one run; its hash identifies the outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub params: Value,
    /// Parsed domain/profile/modulus documents, so the hash follows content rather than paths.
    pub inputs: Value,
}

impl RunConfig {
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn header(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "tool": "indicatrix",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config_hash": self.hash(),
            "defaults": { "grid": DEFAULT_GRID, "angular": DEFAULT_ANGULAR, "seed": DEFAULT_SEED },
            "config": self,
        })
    }

    /// `#`-prefixed lines placed above every CSV table.
    pub fn csv_preamble(&self) -> String {
        format!(
            "# schema={SCHEMA} command={} config_hash={}\n# defaults grid={DEFAULT_GRID} angular={DEFAULT_ANGULAR} seed={DEFAULT_SEED}\n",
            self.command,
            self.hash()
        )
    }
}

/// Files produced by a command plus its JSON summary.
pub struct Artifacts {
    config: RunConfig,
    files: Vec<(String, Vec<u8>)>,
    summary: serde_json::Map<String, Value>,
}

impl Artifacts {
    pub fn new(config: RunConfig) -> Self {
        Self { config, files: Vec::new(), summary: serde_json::Map::new() }
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn csv(&mut self, name: &str, table: &str) {
        let mut body = self.config.csv_preamble();
        body.push_str(table);
        self.files.push((name.to_string(), body.into_bytes()));
    }

    pub fn json(&mut self, name: &str, value: Value) {
        let mut doc = self.config.header();
        doc["data"] = value;
        let mut bytes = serde_json::to_vec_pretty(&doc).expect("json serializes");
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
    }

    pub fn raw(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.to_string(), serde_json::to_value(value).expect("summary serializes"));
    }

    /// Writes every file and `summary.json` into `dir`; returns the written paths.
    pub fn write(mut self, dir: &Path) -> Result<Vec<PathBuf>, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::config(format!("cannot create {}: {e}", dir.display())))?;
        let mut doc = self.config.header();
        doc["summary"] = Value::Object(std::mem::take(&mut self.summary));
        let mut bytes = serde_json::to_vec_pretty(&doc).expect("json serializes");
        bytes.push(b'\n');
        self.files.push(("summary.json".into(), bytes));
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))?;
            written.push(path);
        }
        Ok(written)
    }
}
