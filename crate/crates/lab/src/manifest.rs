use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub core_version: String,
    pub report_schema: u32,
    pub files: Vec<FileEntry>,
    pub timings: Vec<(String, f64)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Writes files under one directory and records them for the manifest.
pub struct Artifacts {
    root: PathBuf,
    files: Vec<FileEntry>,
    timings: Vec<(String, f64)>,
    clock: Instant,
}

fn io_err(path: &Path, source: std::io::Error) -> LabError {
    LabError::File { path: path.display().to_string(), source }
}

impl Artifacts {
    pub fn new(root: &Path) -> Result<Self, LabError> {
        std::fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new(), timings: Vec::new(), clock: Instant::now() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, contents: &str) -> Result<(), LabError> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        log::debug!("wrote {}", path.display());
        self.files.retain(|f| f.path != rel);
        self.files.push(FileEntry { path: rel.to_string(), sha256: sha256_hex(contents.as_bytes()), bytes: contents.len() as u64 });
        Ok(())
    }

    /// Records the wall-clock time since the previous mark.
    pub fn mark(&mut self, stage: &str) {
        let now = Instant::now();
        self.timings.push((stage.to_string(), (now - self.clock).as_secs_f64()));
        self.clock = now;
    }

    /// Writes `manifest_<command>.json` and returns the manifest.
    pub fn finish(self, command: &str, config_hash: String) -> Result<RunManifest, LabError> {
        let manifest = RunManifest {
            command: command.to_string(),
            config_hash,
            core_version: env!("CARGO_PKG_VERSION").to_string(),
            report_schema: sausage_core::clt::SCHEMA_VERSION,
            files: self.files,
            timings: self.timings,
        };
        let path = self.root.join(format!("manifest_{command}.json"));
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
        Ok(manifest)
    }
}

/// Files whose checksum no longer matches the manifest, or that are missing.
pub fn verify(root: &Path, manifest: &RunManifest) -> Vec<String> {
    manifest
        .files
        .iter()
        .filter(|f| std::fs::read(root.join(&f.path)).map_or(true, |b| sha256_hex(&b) != f.sha256))
        .map(|f| f.path.clone())
        .collect()
}
