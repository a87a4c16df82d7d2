use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A stored response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedResponse {
    pub raw: String,
    pub latency_ms: u64,
}

/// Raw responses keyed by request digest, one file per digest under
/// `<dir>/<first two hex chars>/`. Writes go through a temporary file and a
/// rename, so concurrent readers never see a partial entry.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl ResponseCache {
    pub fn open(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(ResponseCache { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, digest: &str) -> PathBuf {
        let shard = digest.get(..2).unwrap_or("xx");
        self.dir.join(shard).join(format!("{digest}.json"))
    }

    /// Unreadable or corrupt entries read as misses.
    pub fn get(&self, digest: &str) -> Option<CachedResponse> {
        let bytes = std::fs::read(self.path(digest)).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    pub fn put(&self, digest: &str, raw: &str, latency_ms: u64) -> Result<()> {
        let path = self.path(digest);
        let shard = path.parent().expect("sharded path");
        std::fs::create_dir_all(shard).map_err(|e| Error::io(shard, e))?;
        let tmp = shard.join(format!(
            ".{digest}.{}.{}.tmp",
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let body = serde_json::to_vec(&CachedResponse {
            raw: raw.to_string(),
            latency_ms,
        })?;
        std::fs::write(&tmp, body).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }

    pub fn len(&self) -> usize {
        let Ok(shards) = std::fs::read_dir(&self.dir) else { return 0 };
        shards
            .flatten()
            .filter_map(|s| std::fs::read_dir(s.path()).ok())
            .flat_map(|entries| entries.flatten())
            .filter(|e| e.path().extension().is_some_and(|x| x == "json"))
            .count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
