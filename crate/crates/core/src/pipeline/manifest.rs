use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::PipelineError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    ValidationFailure,
    RuntimeError,
}

impl RunStatus {
    pub fn from_exit_code(code: i32) -> RunStatus {
        match code {
            0 => RunStatus::Ok,
            1 => RunStatus::ValidationFailure,
            _ => RunStatus::RuntimeError,
        }
    }
}

/// Record of one CLI run. Holds no timestamps so that repeated runs produce
/// identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    /// SHA-256 of the resolved configuration written next to the manifest.
    pub config_sha256: String,
    pub seed: u64,
    pub status: RunStatus,
    pub exit_code: i32,
    pub errors: Vec<String>,
    /// Emitted file name to SHA-256 of its bytes.
    pub files: BTreeMap<String, String>,
    pub results: BTreeMap<String, toml::Value>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64) -> Manifest {
        Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: String::new(),
            seed,
            status: RunStatus::Ok,
            exit_code: 0,
            errors: Vec::new(),
            files: BTreeMap::new(),
            results: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, key: &str, value: impl Into<toml::Value>) {
        self.results.insert(key.to_string(), value.into());
    }

    pub fn fail(&mut self, err: &PipelineError) {
        self.exit_code = err.exit_code();
        self.status = RunStatus::from_exit_code(self.exit_code);
        self.errors.push(err.to_string());
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest fields are serializable")
    }

    /// Writes `contents` under `dir` and records its hash.
    pub fn emit(&mut self, dir: &Path, name: &str, contents: &[u8]) -> Result<(), PipelineError> {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| PipelineError::io(&path, e))?;
        self.files.insert(name.to_string(), sha256_hex(contents));
        Ok(())
    }
}
