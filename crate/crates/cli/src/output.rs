//! Artifacts are held in memory until the whole run has succeeded, then
//! each is written to a temporary file in the output directory and renamed
//! into place. The manifest goes last.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(CliError::runtime)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    /// Writes every artifact and then the manifest. Returns written paths.
    pub fn commit(self, dir: &Path, manifest: &Manifest) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            written.push(write_atomic(dir, name, bytes)?);
        }
        let mut m = serde_json::to_vec_pretty(manifest).map_err(CliError::runtime)?;
        m.push(b'\n');
        written.push(write_atomic(dir, MANIFEST, &m)?);
        Ok(written)
    }
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(&path, e))?;
    tmp.persist(&path).map_err(|e| CliError::io(&path, e.error))?;
    Ok(path)
}

/// Everything needed to regenerate a run's artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments that reproduce the artifacts via `perclab replay`.
    pub argv: Vec<String>,
    pub seed: u64,
    pub workers: usize,
    pub settings: serde_json::Value,
    /// Values chosen during the run, such as an estimated threshold.
    pub derived: serde_json::Value,
    /// Artifact name to size in bytes.
    pub artifacts: BTreeMap<String, usize>,
    pub wall_time_s: f64,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::usage("invalid_manifest", format!("{}: {e}", path.display())))
    }
}
