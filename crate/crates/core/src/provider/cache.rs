//! Persistent embedding cache.
//!
//! The backing file is JSON lines, one entry per line:
//! `{"model": "<model name>", "hash": "<sha256 of text, hex>", "vector": [..]}`.
//! Floats are written in shortest round-trip form, so a reload yields
//! bit-identical vectors. New entries are appended; later duplicates win.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ProviderError, Result};

#[derive(Serialize, Deserialize)]
struct Entry {
    model: String,
    hash: String,
    vector: Vec<f64>,
}

struct Inner {
    entries: HashMap<(String, String), Vec<f64>>,
    writer: Option<BufWriter<File>>,
}

pub struct EmbeddingCache {
    path: Option<PathBuf>,
    inner: Mutex<Inner>,
}

/// Hex SHA-256 of a text, the content half of the cache key.
pub fn content_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl EmbeddingCache {
    /// A cache that lives only as long as the value.
    pub fn in_memory() -> Self {
        Self {
            path: None,
            inner: Mutex::new(Inner {
                entries: HashMap::new(),
                writer: None,
            }),
        }
    }

    /// Opens (or creates) a file-backed cache.
    pub fn open(path: &Path) -> Result<Self> {
        let mut entries = HashMap::new();
        if path.exists() {
            let raw = fs::read_to_string(path)
                .map_err(|e| ProviderError::Cache(format!("{}: {e}", path.display())))?;
            for (lineno, line) in raw.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let entry: Entry = serde_json::from_str(line).map_err(|e| {
                    ProviderError::Cache(format!("{}:{}: {e}", path.display(), lineno + 1))
                })?;
                entries.insert((entry.model, entry.hash), entry.vector);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| ProviderError::Cache(format!("{}: {e}", path.display())))?;
        Ok(Self {
            path: Some(path.to_path_buf()),
            inner: Mutex::new(Inner {
                entries,
                writer: Some(BufWriter::new(file)),
            }),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, model: &str, text: &str) -> Option<Vec<f64>> {
        let key = (model.to_string(), content_hash(text));
        self.inner
            .lock()
            .expect("cache lock")
            .entries
            .get(&key)
            .cloned()
    }

    pub fn insert(&self, model: &str, text: &str, vector: Vec<f64>) -> Result<()> {
        let hash = content_hash(text);
        let mut inner = self.inner.lock().expect("cache lock");
        let key = (model.to_string(), hash.clone());
        if inner.entries.get(&key) == Some(&vector) {
            return Ok(());
        }
        if let Some(writer) = inner.writer.as_mut() {
            let line = serde_json::to_string(&Entry {
                model: model.to_string(),
                hash,
                vector: vector.clone(),
            })
            .map_err(|e| ProviderError::Cache(e.to_string()))?;
            writeln!(writer, "{line}")
                .and_then(|_| writer.flush())
                .map_err(|e| ProviderError::Cache(e.to_string()))?;
        }
        inner.entries.insert(key, vector);
        Ok(())
    }
}
