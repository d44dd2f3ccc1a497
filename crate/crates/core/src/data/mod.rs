//! Manifests, label mapping, preprocessing orchestration, batching and the
//! synthetic desk-scale corpus.

mod batch;
mod corpus;
mod labels;
mod manifest;
mod preprocess;
pub mod synthetic;

use std::path::PathBuf;

pub use batch::{batches, stratified_split};
pub use corpus::{corpus_index_path, load_corpus, write_corpus, CORPUS_INDEX};
pub use labels::Emotion;
pub use manifest::{load_manifest, parse_manifest, write_manifest, LineError, Manifest, ManifestEntry};
pub use preprocess::{
    face_variants, image_to_tensor, prepare_faces, preprocess_dataset, preprocess_dataset_sized, Dataset,
    PreparedFace, Sample, SkipRecord, INPUT_HEIGHT, INPUT_WIDTH, VARIANTS_PER_FACE,
};
pub use synthetic::generate_synthetic;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Image { path: PathBuf, message: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
