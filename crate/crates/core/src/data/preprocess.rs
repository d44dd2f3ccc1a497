//! Detect-gate, face extraction, five-variant expansion, resize and
//! normalization.

use std::fmt;
use std::path::PathBuf;

use rayon::prelude::*;

use super::manifest::ManifestEntry;
use super::Emotion;
use crate::geometry::{extract_face, LandmarkSet};
use crate::imgproc::{load_image, make_variants, resize_bilinear, GrayImage};
use crate::nn::{Shape, Tensor3};

/// Network input width (first tensor axis).
pub const INPUT_WIDTH: usize = 80;
/// Network input height (second tensor axis).
pub const INPUT_HEIGHT: usize = 100;
pub const VARIANTS_PER_FACE: usize = 5;

/// One skipped manifest entry; displays as `<line#> <path> <reason>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkipRecord {
    pub line: usize,
    pub path: PathBuf,
    pub reason: String,
}

impl fmt::Display for SkipRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.line, self.path.display(), self.reason)
    }
}

/// The five resized variants of one usable manifest entry.
#[derive(Debug, Clone)]
pub struct PreparedFace {
    /// Index of the source entry in the list passed to preprocessing.
    pub source: usize,
    pub label: Emotion,
    pub variants: [GrayImage; VARIANTS_PER_FACE],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Tensor3,
    pub label: Emotion,
    pub source: usize,
    /// 1-based variant number within the source's five-image set.
    pub variant: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub shape: Shape,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            shape: Shape::new(width, height, 1),
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Rows from already prepared faces, in order, five per face.
    pub fn from_prepared(width: usize, height: usize, faces: &[PreparedFace]) -> Self {
        let mut ds = Self::empty(width, height);
        for face in faces {
            for (v, img) in face.variants.iter().enumerate() {
                ds.samples.push(Sample {
                    input: image_to_tensor(img),
                    label: face.label,
                    source: face.source,
                    variant: v as u8 + 1,
                });
            }
        }
        ds
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label.index()).collect()
    }
}

/// Pixel `(x, y)` becomes element `(x, y, 0)` with value `p / 255`.
pub fn image_to_tensor(img: &GrayImage) -> Tensor3 {
    let (w, h) = img.dims();
    let mut t = Tensor3::zeros(Shape::new(w, h, 1));
    for y in 0..h {
        for x in 0..w {
            t.set(x, y, 0, img.get(x, y) as f64 / 255.0);
        }
    }
    t
}

/// Extract, expand into five variants, and resize each to `width`×`height`.
pub fn face_variants(
    img: &GrayImage,
    lm: &LandmarkSet,
    width: usize,
    height: usize,
) -> Result<[GrayImage; VARIANTS_PER_FACE], String> {
    let face = extract_face(img, lm).map_err(|e| e.to_string())?;
    let variants = make_variants(&face).map_err(|e| format!("variant generation failed: {e}"))?;
    let mut out = Vec::with_capacity(VARIANTS_PER_FACE);
    for v in &variants {
        out.push(resize_bilinear(v, width, height).map_err(|e| e.to_string())?);
    }
    Ok(out.try_into().expect("five variants"))
}

fn prepare_one(entry: &ManifestEntry, width: usize, height: usize) -> Result<[GrayImage; VARIANTS_PER_FACE], String> {
    let lm = entry
        .landmarks
        .as_ref()
        .ok_or_else(|| "face not detected (no landmarks)".to_string())?;
    let img = load_image(&entry.path).map_err(|e| format!("unreadable image: {e}"))?;
    face_variants(&img, lm, width, height).map_err(|e| format!("unusable landmarks: {e}"))
}

/// Runs the pipeline over every entry. Entries without landmarks, with
/// unreadable images, or with unusable landmark geometry are dropped and
/// appended to `skip_log` in entry order.
pub fn prepare_faces(
    entries: &[ManifestEntry],
    width: usize,
    height: usize,
    skip_log: &mut Vec<SkipRecord>,
) -> Vec<PreparedFace> {
    let results: Vec<_> = entries
        .par_iter()
        .map(|e| prepare_one(e, width, height))
        .collect();
    let mut faces = Vec::with_capacity(results.len());
    for (i, (entry, r)) in entries.iter().zip(results).enumerate() {
        match r {
            Ok(variants) => faces.push(PreparedFace {
                source: i,
                label: entry.label,
                variants,
            }),
            Err(reason) => skip_log.push(SkipRecord {
                line: entry.line,
                path: entry.path.clone(),
                reason,
            }),
        }
    }
    faces
}

/// Preprocesses at the default 80×100 network input size.
pub fn preprocess_dataset(entries: &[ManifestEntry], skip_log: &mut Vec<SkipRecord>) -> Dataset {
    preprocess_dataset_sized(entries, INPUT_WIDTH, INPUT_HEIGHT, skip_log)
}

pub fn preprocess_dataset_sized(
    entries: &[ManifestEntry],
    width: usize,
    height: usize,
    skip_log: &mut Vec<SkipRecord>,
) -> Dataset {
    let faces = prepare_faces(entries, width, height, skip_log);
    Dataset::from_prepared(width, height, &faces)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_axes_follow_image_axes() {
        let img = GrayImage::from_fn(3, 2, |x, y| (x * 10 + y * 100) as u8).unwrap();
        let t = image_to_tensor(&img);
        assert_eq!(t.shape(), Shape::new(3, 2, 1));
        assert_eq!(t.get(2, 1, 0), 120.0 / 255.0);
        assert_eq!(t.get(0, 0, 0), 0.0);
    }

    #[test]
    fn missing_landmarks_skipped() {
        let entries = vec![ManifestEntry {
            line: 4,
            path: PathBuf::from("nowhere.pgm"),
            label: Emotion::Sad,
            landmarks: None,
        }];
        let mut log = Vec::new();
        let ds = preprocess_dataset(&entries, &mut log);
        assert!(ds.is_empty());
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].to_string(), "4 nowhere.pgm face not detected (no landmarks)");
    }

    #[test]
    fn empty_entries_empty_dataset() {
        let mut log = Vec::new();
        let ds = preprocess_dataset(&[], &mut log);
        assert!(ds.is_empty() && log.is_empty());
        assert_eq!(ds.shape, Shape::new(80, 100, 1));
    }
}
