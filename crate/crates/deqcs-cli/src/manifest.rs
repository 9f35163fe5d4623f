//! Run manifests.
//!
//! Every experiment writes a `manifest.json` next to its outputs: the
//! command, the canonical snapshot of the effective configuration (CLI
//! overrides applied), the seed, and content fingerprints of every input
//! consumed and output produced. Nothing time- or path-dependent goes in,
//! so a rerun with the same (config, seed) produces a byte-identical
//! manifest along with byte-identical outputs.

use std::fs;
use std::path::Path;

use deqcs::util::fnv1a_hex;
use serde_json::{json, Map, Value};

use crate::error::{cfg_err, Result};

/// Fingerprint of one file that participated in a run.
#[derive(Debug, Clone)]
pub struct FileRecord {
    /// Base name only — never a path, so runs in different directories
    /// compare equal.
    pub name: String,
    pub bytes: u64,
    pub fnv1a: String,
}

impl FileRecord {
    /// Hash an existing file, recording its base name.
    pub fn hash(path: &Path) -> Result<Self> {
        let data = fs::read(path)
            .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
        Ok(FileRecord {
            name: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
            bytes: data.len() as u64,
            fnv1a: fnv1a_hex(&data),
        })
    }
}

/// Collects what a run touched, then serializes it.
#[derive(Debug, Default)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config_text: String,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config_text: String) -> Self {
        Manifest {
            command: command.to_string(),
            seed,
            config_text,
            ..Manifest::default()
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileRecord::hash(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(FileRecord::hash(path)?);
        Ok(())
    }

    fn records_to_json(records: &[FileRecord]) -> Value {
        // serde_json's default map is ordered by key, which keeps the
        // serialization canonical.
        let mut map = Map::new();
        for r in records {
            map.insert(
                r.name.clone(),
                json!({ "bytes": r.bytes, "fnv1a": r.fnv1a }),
            );
        }
        Value::Object(map)
    }

    pub fn to_json_string(&self) -> String {
        let doc = json!({
            "command": self.command,
            "seed": self.seed,
            "config": self.config_text,
            "config_fnv1a": fnv1a_hex(self.config_text.as_bytes()),
            "inputs": Self::records_to_json(&self.inputs),
            "outputs": Self::records_to_json(&self.outputs),
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("static document");
        s.push('\n');
        s
    }

    /// Write `manifest.json` into `out_dir`. Call last, after all outputs
    /// have been added.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let path = out_dir.join("manifest.json");
        fs::write(&path, self.to_json_string())
            .map_err(|e| cfg_err(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}
