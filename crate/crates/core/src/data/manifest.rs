//! JSON-lines manifests: one `{"path", "label", "landmarks"}` object per line.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DataError, Emotion};
use crate::geometry::{LandmarkSet, LANDMARK_COUNT};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// 1-based line number in the source manifest (0 when built in memory).
    pub line: usize,
    pub path: PathBuf,
    pub label: Emotion,
    pub landmarks: Option<LandmarkSet>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    pub errors: Vec<LineError>,
}

#[derive(Deserialize)]
struct RawEntry {
    path: String,
    label: serde_json::Value,
    #[serde(default)]
    landmarks: Option<Vec<[f64; 2]>>,
}

#[derive(Serialize)]
struct OutEntry<'a> {
    path: &'a str,
    label: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    landmarks: Option<Vec<[f64; 2]>>,
}

/// Reads a manifest; relative image paths resolve against its directory.
/// Bad lines are collected in [`Manifest::errors`] without stopping the
/// parse.
pub fn load_manifest(path: &Path) -> Result<Manifest, DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    Ok(parse_manifest(&text, base))
}

pub fn parse_manifest(text: &str, base_dir: &Path) -> Manifest {
    let mut m = Manifest::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line, base_dir) {
            Ok(mut e) => {
                e.line = line_no;
                m.entries.push(e);
            }
            Err(message) => m.errors.push(LineError { line: line_no, message }),
        }
    }
    m
}

fn parse_line(line: &str, base_dir: &Path) -> Result<ManifestEntry, String> {
    let raw: RawEntry = serde_json::from_str(line).map_err(|e| format!("malformed JSON: {e}"))?;
    let label = raw
        .label
        .as_u64()
        .and_then(|l| Emotion::from_index(l as usize))
        .ok_or_else(|| format!("label {} outside 0..=6", raw.label))?;
    let landmarks = match raw.landmarks {
        None => None,
        Some(pairs) if pairs.len() != LANDMARK_COUNT => {
            return Err(format!("expected {LANDMARK_COUNT} landmarks, got {}", pairs.len()))
        }
        Some(pairs) => Some(LandmarkSet::from_pairs(&pairs).map_err(|e| e.to_string())?),
    };
    let p = PathBuf::from(&raw.path);
    let path = if p.is_absolute() { p } else { base_dir.join(p) };
    Ok(ManifestEntry {
        line: 0,
        path,
        label,
        landmarks,
    })
}

impl ManifestEntry {
    /// One manifest line; `path` is written relative to `base_dir` when it
    /// lies beneath it.
    pub fn to_json_line(&self, base_dir: &Path) -> String {
        let rel = self.path.strip_prefix(base_dir).unwrap_or(&self.path);
        let path = rel.to_string_lossy();
        serde_json::to_string(&OutEntry {
            path: &path,
            label: self.label.into(),
            landmarks: self.landmarks.as_ref().map(LandmarkSet::to_pairs),
        })
        .expect("manifest entries serialize")
    }
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<(), DataError> {
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut text = String::new();
    for e in entries {
        text.push_str(&e.to_json_line(base));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| DataError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lm_json(n: usize) -> String {
        let pts: Vec<String> = (0..n).map(|i| format!("[{},{}]", i, i % 5)).collect();
        format!("[{}]", pts.join(","))
    }

    #[test]
    fn happy_path_line() {
        let text = format!(r#"{{"path":"a.pgm","label":3,"landmarks":{}}}"#, lm_json(68));
        let m = parse_manifest(&text, Path::new("/data"));
        assert!(m.errors.is_empty());
        assert_eq!(m.entries.len(), 1);
        let e = &m.entries[0];
        assert_eq!(e.line, 1);
        assert_eq!(e.path, PathBuf::from("/data/a.pgm"));
        assert_eq!(e.label, Emotion::Happy);
        assert_eq!(e.landmarks.as_ref().unwrap().point(68).x, 67.0);
    }

    #[test]
    fn bad_lines_isolated() {
        let text = format!(
            "{{\"path\":\"a.pgm\",\"label\":7}}\n{{\"path\":\"b.pgm\",\"label\":0}}\n\nnot json\n{{\"path\":\"c.pgm\",\"label\":1,\"landmarks\":{}}}\n{{\"path\":\"d.pgm\",\"label\":-1}}\n",
            lm_json(67)
        );
        let m = parse_manifest(&text, Path::new(""));
        assert_eq!(m.entries.len(), 1);
        assert_eq!(m.entries[0].line, 2);
        assert_eq!(m.entries[0].landmarks, None);
        let lines: Vec<usize> = m.errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![1, 4, 5, 6]);
        assert!(m.errors[0].message.contains("label"));
        assert!(m.errors[2].message.contains("68"));
    }

    #[test]
    fn empty_manifest() {
        let m = parse_manifest("", Path::new(""));
        assert!(m.entries.is_empty() && m.errors.is_empty());
    }

    #[test]
    fn line_roundtrip() {
        let text = format!(r#"{{"path":"x/a.pgm","label":5,"landmarks":{}}}"#, lm_json(68));
        let m = parse_manifest(&text, Path::new("/base"));
        let line = m.entries[0].to_json_line(Path::new("/base"));
        let again = parse_manifest(&line, Path::new("/base"));
        assert_eq!(again.entries[0].path, m.entries[0].path);
        assert_eq!(again.entries[0].landmarks, m.entries[0].landmarks);
        assert!(line.starts_with(r#"{"path":"x/a.pgm","label":5,"#));
    }
}
