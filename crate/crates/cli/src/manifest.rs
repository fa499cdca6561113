use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    pub wall_time_s: f64,
    pub files: Vec<FileEntry>,
}

pub fn checksum(path: &Path) -> Result<FileEntry, CliError> {
    let bytes = fs::read(path)?;
    Ok(FileEntry {
        path: String::new(),
        bytes: bytes.len() as u64,
        sha256: format!("{:x}", Sha256::digest(&bytes)),
    })
}

/// Writes `manifest.json` into `dir`, listing `files` (relative to `dir`) with checksums.
pub fn write<C: Serialize>(dir: &Path, command: &str, config: &C, started: Instant, files: &[String]) -> Result<(), CliError> {
    let mut entries = Vec::with_capacity(files.len());
    for f in files {
        let mut e = checksum(&dir.join(f))?;
        e.path = f.clone();
        entries.push(e);
    }
    let m = RunManifest {
        tool: "nonrad",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        wall_time_s: started.elapsed().as_secs_f64(),
        files: entries,
    };
    let text = serde_json::to_string_pretty(&m)?;
    fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}
