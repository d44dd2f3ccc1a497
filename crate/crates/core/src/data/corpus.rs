use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::imgproc::{load_pgm, save_pgm};
use crate::nn::Shape;

use super::preprocess::{image_to_tensor, Dataset, PreparedFace, Sample};
use super::{DataError, Emotion};

/// Index file written next to the variant images of a preprocessed corpus.
pub const CORPUS_INDEX: &str = "corpus.jsonl";

#[derive(Debug, Serialize, Deserialize)]
struct CorpusLine {
    path: String,
    label: Emotion,
    source: usize,
    variant: u8,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes every variant as `faces/<source>_<variant>.pgm` plus the index.
/// Returns the number of images written.
pub fn write_corpus(out_dir: &Path, faces: &[PreparedFace]) -> Result<usize, DataError> {
    let faces_dir = out_dir.join("faces");
    fs::create_dir_all(&faces_dir).map_err(io_err(&faces_dir))?;
    let mut index = String::new();
    let mut written = 0;
    for face in faces {
        for (v, img) in face.variants.iter().enumerate() {
            let rel = format!("faces/{:05}_{}.pgm", face.source, v + 1);
            let path = out_dir.join(&rel);
            save_pgm(img, &path).map_err(|e| DataError::Image {
                path: path.clone(),
                message: e.to_string(),
            })?;
            let line = CorpusLine {
                path: rel,
                label: face.label,
                source: face.source,
                variant: v as u8 + 1,
            };
            index.push_str(&serde_json::to_string(&line).expect("corpus lines serialize"));
            index.push('\n');
            written += 1;
        }
    }
    let index_path = out_dir.join(CORPUS_INDEX);
    fs::write(&index_path, index).map_err(io_err(&index_path))?;
    Ok(written)
}

/// Accepts either a corpus directory or the index file itself.
pub fn corpus_index_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(CORPUS_INDEX)
    } else {
        path.to_path_buf()
    }
}

/// Loads a preprocessed corpus. All images must share one size.
pub fn load_corpus(path: &Path) -> Result<Dataset, DataError> {
    let index_path = corpus_index_path(path);
    let base = index_path.parent().unwrap_or(Path::new("."));
    let text = fs::read_to_string(&index_path).map_err(io_err(&index_path))?;
    let mut shape: Option<Shape> = None;
    let mut samples = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| DataError::Image {
            path: index_path.clone(),
            message: format!("line {}: {message}", k + 1),
        };
        let entry: CorpusLine = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        let img_path = base.join(&entry.path);
        let img = load_pgm(&img_path).map_err(|e| DataError::Image {
            path: img_path.clone(),
            message: e.to_string(),
        })?;
        let input = image_to_tensor(&img);
        match shape {
            None => shape = Some(input.shape()),
            Some(s) if s != input.shape() => {
                return Err(bad(format!("image is {}x{}, corpus images are {}x{}", img.width(), img.height(), s.d1, s.d2)))
            }
            Some(_) => {}
        }
        samples.push(Sample {
            input,
            label: entry.label,
            source: entry.source,
            variant: entry.variant,
        });
    }
    let shape = shape.ok_or_else(|| DataError::InvalidParameter(format!("{} lists no images", index_path.display())))?;
    Ok(Dataset { shape, samples })
}
