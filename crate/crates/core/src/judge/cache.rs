//! Append-only verdict cache.
//!
//! One JSON record per line, keyed by a hash of (model, kind, rendered
//! prompt text). Successful verdicts are indexed for lookup; failures are
//! appended with their raw responses for inspection but never satisfy a
//! lookup, so a rerun re-queries exactly the failed items. Readers tolerate
//! a torn final line from an interrupted writer.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{JudgeError, JudgeVerdict, PromptKind};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheRecord {
    key: String,
    model: String,
    kind: PromptKind,
    serendipity: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relevance: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unexpectedness: Option<u8>,
    raw_responses: Vec<String>,
    timestamp: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub struct VerdictCache {
    path: PathBuf,
    writer: Mutex<File>,
    index: RwLock<HashMap<String, CacheRecord>>,
}

impl VerdictCache {
    /// Open (or create) a cache file, indexing existing successful records.
    pub fn open(path: &Path) -> Result<Self, JudgeError> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| JudgeError::Cache(format!("{}: {e}", parent.display())))?;
            }
        }
        let mut index = HashMap::new();
        if path.exists() {
            let body = std::fs::read_to_string(path)
                .map_err(|e| JudgeError::Cache(format!("{}: {e}", path.display())))?;
            for line in body.lines() {
                if line.trim().is_empty() {
                    continue;
                }
                // A torn trailing line (interrupted append) is skipped.
                let Ok(record) = serde_json::from_str::<CacheRecord>(line) else {
                    continue;
                };
                if record.error.is_none() && record.serendipity.is_some() {
                    index.insert(record.key.clone(), record);
                }
            }
        }
        let writer = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| JudgeError::Cache(format!("{}: {e}", path.display())))?;
        Ok(Self {
            path: path.to_path_buf(),
            writer: Mutex::new(writer),
            index: RwLock::new(index),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("cache index lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<JudgeVerdict> {
        let index = self.index.read().expect("cache index lock");
        index.get(key).map(|r| JudgeVerdict {
            serendipity: r.serendipity.expect("indexed records have a score"),
            relevance: r.relevance,
            unexpectedness: r.unexpectedness,
            raw_responses: r.raw_responses.clone(),
            model_id: r.model.clone(),
            kind: r.kind,
        })
    }

    fn append(&self, record: &CacheRecord) -> Result<(), JudgeError> {
        let mut line = serde_json::to_string(record)
            .map_err(|e| JudgeError::Cache(format!("serialize: {e}")))?;
        line.push('\n');
        let mut writer = self.writer.lock().expect("cache writer lock");
        writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.flush())
            .map_err(|e| JudgeError::Cache(format!("{}: {e}", self.path.display())))
    }

    /// Store a successful verdict; it becomes visible to readers only
    /// after the write completes.
    pub fn put(&self, key: &str, verdict: &JudgeVerdict) -> Result<(), JudgeError> {
        let record = CacheRecord {
            key: key.to_string(),
            model: verdict.model_id.clone(),
            kind: verdict.kind,
            serendipity: Some(verdict.serendipity),
            relevance: verdict.relevance,
            unexpectedness: verdict.unexpectedness,
            raw_responses: verdict.raw_responses.clone(),
            timestamp: now(),
            error: None,
        };
        self.append(&record)?;
        self.index
            .write()
            .expect("cache index lock")
            .insert(key.to_string(), record);
        Ok(())
    }

    /// Persist a failed judging attempt (raw responses kept for
    /// inspection). Failures are not indexed.
    pub fn put_failure(
        &self,
        key: &str,
        kind: PromptKind,
        model: &str,
        raw_responses: &[String],
        error: &str,
    ) -> Result<(), JudgeError> {
        self.append(&CacheRecord {
            key: key.to_string(),
            model: model.to_string(),
            kind,
            serendipity: None,
            relevance: None,
            unexpectedness: None,
            raw_responses: raw_responses.to_vec(),
            timestamp: now(),
            error: Some(error.to_string()),
        })
    }
}

fn now() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(kind: PromptKind) -> JudgeVerdict {
        JudgeVerdict {
            serendipity: 4,
            relevance: kind.has_subscores().then_some(3),
            unexpectedness: kind.has_subscores().then_some(5),
            raw_responses: vec!["relevance: 3\nunexpectedness: 5\nserendipity: 4".into()],
            model_id: "m".into(),
            kind,
        }
    }

    #[test]
    fn round_trip_including_raw_responses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let cache = VerdictCache::open(&path).unwrap();
        let v = verdict(PromptKind::Cot);
        cache.put("k1", &v).unwrap();
        assert_eq!(cache.get("k1").unwrap(), v);

        // Reopen from disk.
        drop(cache);
        let cache = VerdictCache::open(&path).unwrap();
        assert_eq!(cache.get("k1").unwrap(), v);
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn failures_are_persisted_but_not_served() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let cache = VerdictCache::open(&path).unwrap();
        cache
            .put_failure("k1", PromptKind::Base, "m", &["score: 6".into()], "out of range")
            .unwrap();
        assert!(cache.get("k1").is_none());
        let body = std::fs::read_to_string(&path).unwrap();
        assert!(body.contains("score: 6"));
        assert!(body.contains("out of range"));

        let reopened = VerdictCache::open(&path).unwrap();
        assert!(reopened.get("k1").is_none());
    }

    #[test]
    fn torn_final_line_is_tolerated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let cache = VerdictCache::open(&path).unwrap();
        cache.put("k1", &verdict(PromptKind::Ls)).unwrap();
        drop(cache);
        // Simulate an interrupted append.
        let mut body = std::fs::read_to_string(&path).unwrap();
        body.push_str("{\"key\": \"k2\", \"model\"");
        std::fs::write(&path, body).unwrap();
        let cache = VerdictCache::open(&path).unwrap();
        assert!(cache.get("k1").is_some());
        assert!(cache.get("k2").is_none());
    }

    #[test]
    fn concurrent_appends_and_reads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let cache = VerdictCache::open(&path).unwrap();
        std::thread::scope(|scope| {
            for t in 0..4 {
                let cache = &cache;
                scope.spawn(move || {
                    for i in 0..25 {
                        let key = format!("k{t}-{i}");
                        cache.put(&key, &verdict(PromptKind::Base)).unwrap();
                        assert!(cache.get(&key).is_some());
                    }
                });
            }
        });
        assert_eq!(cache.len(), 100);
        // Every line on disk is complete and parseable.
        drop(cache);
        let reopened = VerdictCache::open(&path).unwrap();
        assert_eq!(reopened.len(), 100);
    }
}
