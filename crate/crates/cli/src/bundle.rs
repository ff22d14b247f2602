//! Output directories with a checksum manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::arrays::{encode_array, ArrayHeader};
use crate::error::CliError;
use fracwave_core::SpaceTimeField;

pub const MANIFEST: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Artifacts written so far; the manifest lists them sorted by name.
#[derive(Debug)]
pub struct OutputBundle {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl OutputBundle {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.entries.retain(|e| e.name != name);
        self.entries.push(ManifestEntry {
            name: name.to_string(),
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn write_array(&mut self, name: &str, header: &ArrayHeader, field: &SpaceTimeField) -> Result<(), CliError> {
        self.write(name, &encode_array(header, field))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// CSV with a header row; `rows` are already formatted cells.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut text = header.join(",");
        text.push('\n');
        for r in rows {
            text.push_str(&r.join(","));
            text.push('\n');
        }
        self.write(name, text.as_bytes())
    }

    pub fn manifest_text(&self) -> String {
        let mut entries = self.entries.clone();
        entries.sort_by(|a, b| a.name.cmp(&b.name));
        let mut out = String::new();
        for e in entries {
            let _ = writeln!(out, "{}  {}  {}", e.sha256, e.bytes, e.name);
        }
        out
    }

    /// Writes the manifest and returns its path.
    pub fn finish(self) -> Result<PathBuf, CliError> {
        let path = self.dir.join(MANIFEST);
        std::fs::write(&path, self.manifest_text())?;
        Ok(path)
    }
}

/// Re-hashes every file listed in a manifest; returns the names that differ.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(dir.join(MANIFEST))?;
    let mut bad = Vec::new();
    for line in text.lines() {
        let mut parts = line.splitn(3, "  ");
        let (Some(sha), Some(_), Some(name)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(CliError::Config(format!("malformed manifest line '{line}'")));
        };
        let bytes = std::fs::read(dir.join(name))?;
        if hex::encode(Sha256::digest(&bytes)) != sha {
            bad.push(name.to_string());
        }
    }
    Ok(bad)
}

/// Shortest round-trip formatting for CSV cells.
pub fn cell(v: f64) -> String {
    format!("{v:e}")
}
