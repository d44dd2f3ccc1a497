//! The expression classifier: architecture, training, inference and the
//! weight file format.

mod io;
mod predict;
mod spec;
mod train;

pub use io::{decode_weights, encode_weights, load_weights, save_weights, LoadError, MAGIC, VERSION};
pub use predict::{average_probabilities, argmax, predict, predict_averaged, predict_tensor};
pub use spec::{build_paper_network, build_paper_network_for, infer_shapes, Activation, LayerSpec, NetworkSpec};
pub use train::{train, EpochStats, NetworkState, TrainConfig};

use crate::imgproc::ImgError;
use crate::nn::NnError;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("preprocessing failed: {0}")]
    Image(String),
}

impl From<NnError> for ModelError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::Shape(s) => ModelError::Shape(s),
            NnError::InvalidParameter(s) => ModelError::Config(s),
            NnError::InvalidInput(s) => ModelError::InvalidInput(s),
        }
    }
}

impl From<ImgError> for ModelError {
    fn from(e: ImgError) -> Self {
        ModelError::Image(e.to_string())
    }
}
