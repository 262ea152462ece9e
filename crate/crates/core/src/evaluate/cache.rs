use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EvalError, Metrics};

/// SHA-256 over the strategy identity, seed, data hash and evaluator.
pub fn cache_key(strategy: &str, seed: u64, data_hash: &str, evaluator: &str) -> String {
    let mut h = Sha256::new();
    for part in [strategy, &seed.to_string(), data_hash, evaluator] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize, Deserialize)]
struct Line {
    key: String,
    metrics: Metrics,
}

/// Memo of evaluation results, optionally mirrored to a JSONL file. Safe to
/// share between threads; a repeated key overwrites with an identical value.
#[derive(Debug, Default)]
pub struct EvalCache {
    entries: Mutex<HashMap<String, Metrics>>,
    path: Option<PathBuf>,
}

impl EvalCache {
    pub fn in_memory() -> Self {
        EvalCache::default()
    }

    /// Loads existing lines from `path` (if the file exists) and appends new
    /// entries to it.
    pub fn persistent(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let f = File::open(&path).map_err(|e| EvalError::Cache(e.to_string()))?;
            for (n, line) in BufReader::new(f).lines().enumerate() {
                let line = line.map_err(|e| EvalError::Cache(e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                let l: Line = serde_json::from_str(&line)
                    .map_err(|e| EvalError::Cache(format!("{}:{}: {e}", path.display(), n + 1)))?;
                entries.insert(l.key, l.metrics);
            }
        }
        Ok(EvalCache {
            entries: Mutex::new(entries),
            path: Some(path),
        })
    }

    pub fn get(&self, key: &str) -> Option<Metrics> {
        self.entries.lock().expect("cache lock").get(key).copied()
    }

    pub fn insert(&self, key: String, metrics: Metrics) -> Result<(), EvalError> {
        let mut map = self.entries.lock().expect("cache lock");
        if let Some(path) = &self.path {
            if !map.contains_key(&key) {
                let mut f = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| EvalError::Cache(e.to_string()))?;
                let line = serde_json::to_string(&Line {
                    key: key.clone(),
                    metrics,
                })
                .map_err(|e| EvalError::Cache(e.to_string()))?;
                writeln!(f, "{line}").map_err(|e| EvalError::Cache(e.to_string()))?;
            }
        }
        map.insert(key, metrics);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
