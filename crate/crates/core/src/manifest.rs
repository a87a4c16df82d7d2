//! JSONL sample manifests.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::charlevels::LevelTag;
use crate::error::{Error, Result};
use crate::sentiment::Sentiment;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const ORIGINALS_DIR: &str = "originals";

/// One generated image. Field names are a frozen file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleManifestEntry {
    pub sample_id: String,
    pub word: String,
    pub level: LevelTag,
    pub font_size_pt: u32,
    pub spacing_px: u32,
    pub width_px: u32,
    pub height_px: u32,
    pub label: Sentiment,
    pub seed: u64,
    /// Relative to the manifest's directory.
    pub image_path: String,
    pub font_hash: String,
    pub pool_version: String,
    pub ssim: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    dir: PathBuf,
    pub entries: Vec<SampleManifestEntry>,
}

impl Manifest {
    pub fn new(dir: PathBuf, entries: Vec<SampleManifestEntry>) -> Self {
        Manifest { dir, entries }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn image_path(&self, entry: &SampleManifestEntry) -> PathBuf {
        self.dir.join(&entry.image_path)
    }

    /// Original word art lives at `originals/<WORD>.png` beside the manifest.
    pub fn original_path(&self, entry: &SampleManifestEntry) -> PathBuf {
        Self::original_path_in(&self.dir, &entry.word)
    }

    pub fn original_path_in(dir: &Path, word: &str) -> PathBuf {
        dir.join(ORIGINALS_DIR).join(format!("{word}.png"))
    }

    pub fn get(&self, sample_id: &str) -> Option<&SampleManifestEntry> {
        self.entries.iter().find(|e| e.sample_id == sample_id)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl()?.as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    /// Loads a manifest; image paths resolve against the file's directory.
    /// Duplicate sample ids are rejected.
    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let malformed = |message: String| Error::Manifest {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let entry: SampleManifestEntry =
                serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
            if !seen.insert(entry.sample_id.clone()) {
                return Err(malformed(format!("duplicate sample_id {}", entry.sample_id)));
            }
            entries.push(entry);
        }
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Manifest { dir, entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str) -> SampleManifestEntry {
        SampleManifestEntry {
            sample_id: id.into(),
            word: "BAD".into(),
            level: LevelTag::L3,
            font_size_pt: 12,
            spacing_px: 0,
            width_px: 1200,
            height_px: 600,
            label: Sentiment::Negative,
            seed: 1,
            image_path: format!("images/{id}.png"),
            font_hash: "f".into(),
            pool_version: "1:x".into(),
            ssim: None,
        }
    }

    #[test]
    fn frozen_field_names() {
        let v: serde_json::Value = serde_json::to_value(entry("a")).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        let mut want = vec![
            "sample_id", "word", "level", "font_size_pt", "spacing_px", "width_px", "height_px",
            "label", "seed", "image_path", "font_hash", "pool_version", "ssim",
        ];
        want.sort();
        assert_eq!(keys, want);
        assert_eq!(v["level"], "L3");
        assert_eq!(v["label"], "Negative");
    }

    #[test]
    fn load_rejects_duplicates_and_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        let m = Manifest::new(dir.path().into(), vec![entry("a"), entry("a")]);
        m.write_jsonl(&p).unwrap();
        assert!(matches!(Manifest::load(&p), Err(Error::Manifest { line: 2, .. })));
        std::fs::write(&p, "{not json}\n").unwrap();
        assert!(matches!(Manifest::load(&p), Err(Error::Manifest { line: 1, .. })));
    }

    #[test]
    fn load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        let m = Manifest::new(dir.path().into(), vec![entry("a"), entry("b")]);
        m.write_jsonl(&p).unwrap();
        let back = Manifest::load(&p).unwrap();
        assert_eq!(back.entries, m.entries);
        assert_eq!(back.original_path(&back.entries[0]), dir.path().join("originals/BAD.png"));
    }
}
