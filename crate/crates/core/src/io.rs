//! File formats and atomic persistence.
//!
//! Metric JSON: `{"n": int, "labels": [string]?, "d": [[real]]}` (row-major,
//! full matrix; the loader validates). Embedding JSON:
//! `{"n": int, "dim": int, "lip_bound": real, "coords": [[real]]}`.
//! All writes go through write-temp-then-rename so interrupted runs never
//! leave truncated files.

use crate::embed::Embedding;
use crate::metric::{MetricSpace, MetricError};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("declared n = {declared} does not match matrix size {actual}")]
    SizeMismatch { declared: usize, actual: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Serialize, Deserialize)]
struct MetricJson {
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    d: Vec<Vec<f64>>,
}

pub fn load_metric(path: &Path) -> Result<MetricSpace, IoError> {
    let raw = std::fs::read_to_string(path)?;
    let parsed: MetricJson = serde_json::from_str(&raw)?;
    if parsed.d.len() != parsed.n {
        return Err(IoError::SizeMismatch { declared: parsed.n, actual: parsed.d.len() });
    }
    Ok(MetricSpace::new(parsed.d, parsed.labels)?)
}

pub fn save_metric(m: &MetricSpace, path: &Path) -> Result<(), IoError> {
    let doc = MetricJson {
        n: m.n(),
        labels: m.labels().map(|l| l.to_vec()),
        d: m.matrix().to_vec(),
    };
    write_atomic(path, serde_json::to_string_pretty(&doc)?.as_bytes())
}

pub fn load_embedding(path: &Path) -> Result<Embedding, IoError> {
    let raw = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&raw)?)
}

pub fn save_embedding(e: &Embedding, path: &Path) -> Result<(), IoError> {
    write_atomic(path, serde_json::to_string(&e)?.as_bytes())
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<(), IoError> {
    write_atomic(path, serde_json::to_string_pretty(value)?.as_bytes())
}

/// Write to a sibling temp file, fsync, then rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into())
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::cycle;

    #[test]
    fn metric_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let m = cycle(5).unwrap();
        save_metric(&m, &path).unwrap();
        let back = load_metric(&path).unwrap();
        assert_eq!(back.n(), 5);
        assert_eq!(back.dist(0, 2), m.dist(0, 2));
    }

    #[test]
    fn loader_rejects_size_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, r#"{"n": 3, "d": [[0,1],[1,0]]}"#).unwrap();
        assert!(matches!(load_metric(&path), Err(IoError::SizeMismatch { .. })));
    }

    #[test]
    fn loader_validates_metric() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tri.json");
        std::fs::write(&path, r#"{"n": 3, "d": [[0,1,3],[1,0,1],[3,1,0]]}"#).unwrap();
        assert!(matches!(load_metric(&path), Err(IoError::Metric(_))));
    }
}
