//! Run manifests: what was run, with which settings, and what it wrote.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    /// Relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub config: BTreeMap<String, String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<OutputFile>,
    pub verifications: Vec<Verification>,
    pub all_verifications_passed: bool,
    pub wall_clock_seconds: f64,
}

/// Collects outputs while a subcommand runs and writes the manifest last.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<OutputFile>,
    verifications: Vec<Verification>,
    config: BTreeMap<String, String>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

impl OutputSet {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            verifications: Vec::new(),
            config: BTreeMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, data: &[u8]) -> Result<(), CliError> {
        let path = self.path(name);
        std::fs::write(&path, data).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.record(name, data);
        Ok(())
    }

    /// Registers a file some other writer already produced.
    pub fn register(&mut self, name: &str) -> Result<(), CliError> {
        let path = self.path(name);
        let data = std::fs::read(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.record(name, &data);
        Ok(())
    }

    fn record(&mut self, name: &str, data: &[u8]) {
        self.files.retain(|f| f.path != name);
        self.files.push(OutputFile {
            path: name.to_string(),
            bytes: data.len() as u64,
            sha256: sha256_hex(data),
        });
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn config(&mut self, key: &str, value: impl ToString) {
        self.config.insert(key.to_string(), value.to_string());
    }

    pub fn verify(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        let detail = detail.into();
        if !passed {
            log::warn!("verification `{name}` failed: {detail}");
        }
        self.verifications.push(Verification {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn verifications(&self) -> &[Verification] {
        &self.verifications
    }

    pub fn files(&self) -> &[OutputFile] {
        &self.files
    }

    /// Writes `manifest.json` and returns the manifest.
    pub fn finish(
        self,
        subcommand: &str,
        seed: Option<u64>,
        inputs: &[&Path],
        started: std::time::Instant,
    ) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config: self.config,
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            outputs: self.files,
            all_verifications_passed: self.verifications.iter().all(|v| v.passed),
            verifications: self.verifications,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
