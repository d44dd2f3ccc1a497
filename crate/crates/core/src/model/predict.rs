use crate::data::image_to_tensor;
use crate::imgproc::{make_variants, resize_bilinear, GrayImage};
use crate::nn::Tensor3;

use super::train::NetworkState;
use super::ModelError;

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Eval-mode class probabilities for an already normalized input.
pub fn predict_tensor(state: &NetworkState, x: &Tensor3) -> Result<Vec<f64>, ModelError> {
    Ok(state.net.probabilities(x)?)
}

/// Class probabilities for a face whose dimensions equal the network input.
pub fn predict(state: &NetworkState, face: &GrayImage) -> Result<Vec<f64>, ModelError> {
    let input = state.net.input;
    if input.channels != 1 || face.dims() != (input.d1, input.d2) {
        return Err(ModelError::Shape(format!(
            "network expects a {}x{} grayscale face, got {}x{}",
            input.d1,
            input.d2,
            face.width(),
            face.height()
        )));
    }
    predict_tensor(state, &image_to_tensor(face))
}

/// Elementwise mean of probability vectors, computed as offsets from the
/// first vector so that identical inputs average to themselves exactly.
pub fn average_probabilities(vectors: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
    let first = vectors
        .first()
        .ok_or_else(|| ModelError::InvalidInput("no probability vectors to average".into()))?;
    if vectors.iter().any(|v| v.len() != first.len()) {
        return Err(ModelError::Shape("probability vectors differ in length".into()));
    }
    let n = vectors.len() as f64;
    Ok((0..first.len())
        .map(|k| {
            let offset: f64 = vectors[1..].iter().map(|v| v[k] - first[k]).sum();
            first[k] + offset / n
        })
        .collect())
}

/// Predicts on all five variants of a masked face crop and averages.
pub fn predict_averaged(state: &NetworkState, face: &GrayImage) -> Result<(usize, Vec<f64>), ModelError> {
    let input = state.net.input;
    let probs = make_variants(face)?
        .iter()
        .map(|v| predict(state, &resize_bilinear(v, input.d1, input.d2)?))
        .collect::<Result<Vec<_>, _>>()?;
    let mean = average_probabilities(&probs)?;
    Ok((argmax(&mean), mean))
}
