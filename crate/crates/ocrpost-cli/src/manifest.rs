//! Run manifest: the executed stage order with content hashes of every
//! input and output, plus the config that produced them.
//!
//! The manifest is rewritten after each completed stage, so an aborted run
//! still records what it finished. Artifact paths are stored relative to
//! the output directory and the manifest carries no timestamps, making two
//! runs with the same config byte-identical even in different output
//! directories.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct StageEntry {
    pub name: String,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub config: FileEntry,
    pub seed: u64,
    pub stages: Vec<StageEntry>,
}

/// Hex SHA-256 of a file's bytes.
pub fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(format!("{:x}", Sha256::digest(bytes)))
}

/// Entry whose recorded path is `path` relative to `out_dir` when it lives
/// there, and the path as written otherwise.
pub fn file_entry(path: &Path, out_dir: &Path) -> Result<FileEntry> {
    let display = match path.strip_prefix(out_dir) {
        Ok(rel) => rel.display().to_string(),
        Err(_) => path.display().to_string(),
    };
    Ok(FileEntry {
        path: display,
        sha256: sha256_hex(path)?,
    })
}

impl Manifest {
    pub fn new(config_path: &Path, seed: u64) -> Result<Self> {
        Ok(Manifest {
            config: FileEntry {
                path: config_path.display().to_string(),
                sha256: sha256_hex(config_path)?,
            },
            seed,
            stages: Vec::new(),
        })
    }

    pub fn record(
        &mut self,
        name: &str,
        inputs: &[&Path],
        outputs: &[&Path],
        out_dir: &Path,
    ) -> Result<()> {
        let entry = StageEntry {
            name: name.to_string(),
            inputs: inputs
                .iter()
                .map(|p| file_entry(p, out_dir))
                .collect::<Result<_>>()?,
            outputs: outputs
                .iter()
                .map(|p| file_entry(p, out_dir))
                .collect::<Result<_>>()?,
        };
        self.stages.push(entry);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self).context("serializing manifest")?;
        json.push('\n');
        fs::write(path, json).with_context(|| format!("writing manifest {}", path.display()))
    }
}
