//! Run manifests: hashes of the configuration and of every output file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    pub config_sha256: String,
    pub library_version: String,
    pub timestamp: String,
    /// File name (relative to the output directory) to its SHA-256.
    pub outputs: BTreeMap<String, String>,
    pub summary: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Collects output files, then writes them and the manifest into one directory.
#[derive(Debug)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self { files: Vec::new() }
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every file and then the manifest; returns the manifest.
    pub fn commit(
        self,
        dir: &Path,
        command: &str,
        config_sha256: String,
        summary: serde_json::Value,
    ) -> Result<RunManifest> {
        fs::create_dir_all(dir)?;
        let mut outputs = BTreeMap::new();
        for (name, bytes) in &self.files {
            write_atomic(&dir.join(name), bytes)?;
            outputs.insert(name.clone(), sha256_hex(bytes));
        }
        let manifest = RunManifest {
            command: command.to_string(),
            config_sha256,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            outputs,
            summary,
        };
        write_atomic(&dir.join(MANIFEST_FILE), &serde_json::to_vec_pretty(&manifest)?)?;
        Ok(manifest)
    }
}

impl Default for OutputSet {
    fn default() -> Self {
        Self::new()
    }
}

/// Re-hashes every output listed in `dir/manifest.json`.
pub fn verify_manifest(dir: &Path) -> Result<RunManifest> {
    let text = fs::read(dir.join(MANIFEST_FILE))?;
    let manifest: RunManifest = serde_json::from_slice(&text)?;
    for (name, expected) in &manifest.outputs {
        let bytes = fs::read(dir.join(name)).map_err(|e| Error::Manifest(format!("{name}: {e}")))?;
        let actual = sha256_hex(&bytes);
        if &actual != expected {
            return Err(Error::Manifest(format!("{name}: expected {expected}, found {actual}")));
        }
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha_of_empty() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn round_trip_and_tamper() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputSet::new();
        out.add("a.txt", b"hello\n".to_vec());
        out.add_json("b.json", &serde_json::json!({"x": 1})).unwrap();
        let m = out.commit(dir.path(), "test", sha256_hex(b"cfg"), serde_json::json!({})).unwrap();
        assert_eq!(verify_manifest(dir.path()).unwrap(), m);
        assert!(!dir.path().join("a.txt.tmp").exists());
        fs::write(dir.path().join("a.txt"), b"tampered").unwrap();
        assert!(matches!(verify_manifest(dir.path()), Err(Error::Manifest(_))));
        fs::remove_file(dir.path().join("a.txt")).unwrap();
        assert!(matches!(verify_manifest(dir.path()), Err(Error::Manifest(_))));
    }
}
