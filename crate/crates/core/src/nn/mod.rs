//! From-scratch network layers with forward and backward passes.
//!
//! All arithmetic is `f64`. Convolutions are valid (no padding) and pooling
//! uses floor division for output extents.

mod activation;
mod conv;
mod dense;
mod dropout;
pub mod gradcheck;
mod network;
mod optim;
mod pool;
mod tensor;

pub use activation::{cross_entropy, cross_entropy_grad, relu, relu_backward, softmax, PROB_FLOOR};
pub use conv::{conv_backward, conv_forward, ConvParams};
pub use dense::{dense_backward, dense_forward, DenseParams};
pub use dropout::{dropout, dropout_backward, Mode};
pub use gradcheck::{gradient_check, gradient_check_with, GradCheckReport};
pub use network::{Layer, Network, Trace};
pub use optim::sgd_step;
pub use pool::{avgpool_backward, avgpool_forward, maxpool_backward, maxpool_forward, Pool2};
pub use tensor::{Shape, Tensor3};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Gradient buffers mirroring a parametric layer's weights and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros(n_weights: usize, n_bias: usize) -> Self {
        Self {
            weights: vec![0.0; n_weights],
            bias: vec![0.0; n_bias],
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.weights.iter_mut().chain(self.bias.iter_mut()).for_each(|v| *v *= s);
    }
}
