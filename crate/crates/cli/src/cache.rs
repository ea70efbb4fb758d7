//! Content-addressed result cache on disk.
//!
//! Entries are keyed by the SHA-256 of a kind tag and the canonical bytes of
//! the inputs.  Values are stored in shortest round-trip form, so a hit
//! reproduces the computed value bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::output::to_json_roundtrip;

#[derive(Clone, Debug, Default)]
pub struct DiskCache {
    dir: Option<PathBuf>,
}

impl DiskCache {
    pub fn new(dir: Option<&Path>) -> Self {
        DiskCache { dir: dir.map(Path::to_path_buf) }
    }

    pub fn disabled() -> Self {
        DiskCache { dir: None }
    }

    pub fn key(kind: &str, parts: &[&[u8]]) -> String {
        let mut h = Sha256::new();
        h.update(kind.as_bytes());
        for p in parts {
            h.update((p.len() as u64).to_le_bytes());
            h.update(p);
        }
        format!("{:x}", h.finalize())
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    pub fn get(&self, key: &str) -> Option<Value> {
        let text = fs::read_to_string(self.path(key)?).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// Write through a temporary file so readers never see partial entries.
    pub fn put(&self, key: &str, value: &Value) -> std::io::Result<()> {
        let Some(path) = self.path(key) else { return Ok(()) };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, to_json_roundtrip(value))?;
        fs::rename(tmp, path)
    }
}
