use rand::{Rng, SeedableRng};

use super::activation::{cross_entropy, cross_entropy_grad, relu, relu_backward, softmax};
use super::conv::{conv_backward_impl, conv_forward, ConvParams};
use super::dense::{dense_backward_impl, dense_forward, DenseParams};
use super::dropout::{dropout, dropout_backward, Mode};
use super::pool::{avgpool_backward, avgpool_forward, maxpool_backward, maxpool_forward, Pool2};
use super::tensor::{Shape, Tensor3};
use super::{Gradients, NnError};

/// One stage of a sequential network. Parametric stages own their weights.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv(ConvParams),
    Relu,
    MaxPool(Pool2),
    AvgPool(Pool2),
    Flatten,
    Dense(DenseParams),
    Dropout(f64),
}

impl Layer {
    pub fn name(&self) -> &'static str {
        match self {
            Layer::Conv(_) => "conv",
            Layer::Relu => "relu",
            Layer::MaxPool(_) => "maxpool",
            Layer::AvgPool(_) => "avgpool",
            Layer::Flatten => "flatten",
            Layer::Dense(_) => "dense",
            Layer::Dropout(_) => "dropout",
        }
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape, NnError> {
        match self {
            Layer::Conv(p) => p.output_shape(input),
            Layer::Relu | Layer::Dropout(_) => Ok(input),
            Layer::MaxPool(p) | Layer::AvgPool(p) => p.output_shape(input),
            Layer::Flatten => Ok(Shape::vector(input.len())),
            Layer::Dense(p) => {
                if !input.is_vector() || input.channels != p.inputs {
                    return Err(NnError::Shape(format!(
                        "dense layer expects a flat vector of {} values, got {input}",
                        p.inputs
                    )));
                }
                Ok(Shape::vector(p.outputs))
            }
        }
    }

    /// Weight and bias buffers of a parametric layer.
    pub fn params(&self) -> Option<(&[f64], &[f64])> {
        match self {
            Layer::Conv(p) => Some((&p.weights, &p.bias)),
            Layer::Dense(p) => Some((&p.weights, &p.bias)),
            _ => None,
        }
    }

    pub fn params_mut(&mut self) -> Option<(&mut Vec<f64>, &mut Vec<f64>)> {
        match self {
            Layer::Conv(p) => Some((&mut p.weights, &mut p.bias)),
            Layer::Dense(p) => Some((&mut p.weights, &mut p.bias)),
            _ => None,
        }
    }
}

/// Activations recorded during a forward pass; `activations[k]` is the input
/// of layer `k` and the last entry holds the logits.
#[derive(Debug, Clone)]
pub struct Trace {
    pub activations: Vec<Tensor3>,
    pub dropout_scales: Vec<Option<Vec<f64>>>,
}

impl Trace {
    pub fn logits(&self) -> &[f64] {
        self.activations.last().expect("trace holds the input").data()
    }
}

/// Sequential stack ending in raw logits; softmax and cross-entropy are
/// applied by [`Network::loss_and_gradients`] and [`Network::probabilities`].
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub input: Shape,
    pub layers: Vec<Layer>,
}

impl Network {
    pub fn new(input: Shape, layers: Vec<Layer>) -> Result<Self, NnError> {
        let net = Self { input, layers };
        net.output_shapes()?;
        Ok(net)
    }

    /// Shape after each layer; fails on the first layer that cannot accept
    /// its input.
    pub fn output_shapes(&self) -> Result<Vec<Shape>, NnError> {
        let mut shape = self.input;
        let mut out = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            shape = layer
                .output_shape(shape)
                .map_err(|e| NnError::Shape(format!("layer {k} ({}): {e}", layer.name())))?;
            out.push(shape);
        }
        Ok(out)
    }

    pub fn output_len(&self) -> Result<usize, NnError> {
        Ok(self.output_shapes()?.last().copied().unwrap_or(self.input).len())
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .filter_map(Layer::params)
            .map(|(w, b)| w.len() + b.len())
            .sum()
    }

    fn first_param_layer(&self) -> Option<usize> {
        self.layers.iter().position(|l| l.params().is_some())
    }

    pub fn forward<R: Rng + ?Sized>(&self, x: &Tensor3, mode: Mode, rng: &mut R) -> Result<Trace, NnError> {
        if x.shape() != self.input {
            return Err(NnError::Shape(format!(
                "network expects input {}, got {}",
                self.input,
                x.shape()
            )));
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut dropout_scales = Vec::with_capacity(self.layers.len());
        activations.push(x.clone());
        for layer in &self.layers {
            let cur = activations.last().expect("non-empty");
            let (next, scale) = apply(layer, cur, mode, rng)?;
            activations.push(next);
            dropout_scales.push(scale);
        }
        Ok(Trace {
            activations,
            dropout_scales,
        })
    }

    /// Eval-mode pass starting at layer `start` with that layer's input.
    pub fn forward_from(&self, start: usize, x: &Tensor3) -> Result<Tensor3, NnError> {
        let mut cur = x.clone();
        // eval mode draws nothing from the generator
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for layer in &self.layers[start..] {
            cur = apply(layer, &cur, Mode::Eval, &mut rng)?.0;
        }
        Ok(cur)
    }

    pub fn logits(&self, x: &Tensor3) -> Result<Vec<f64>, NnError> {
        if x.shape() != self.input {
            return Err(NnError::Shape(format!(
                "network expects input {}, got {}",
                self.input,
                x.shape()
            )));
        }
        Ok(self.forward_from(0, x)?.into_data())
    }

    /// Eval-mode class probabilities.
    pub fn probabilities(&self, x: &Tensor3) -> Result<Vec<f64>, NnError> {
        softmax(&self.logits(x)?)
    }

    /// Zeroed gradient buffers, `Some` for parametric layers.
    pub fn zero_gradients(&self) -> Vec<Option<Gradients>> {
        self.layers
            .iter()
            .map(|l| l.params().map(|(w, b)| Gradients::zeros(w.len(), b.len())))
            .collect()
    }

    /// Backpropagates a logit gradient through a recorded trace. The result
    /// has one entry per layer, `Some` for parametric layers.
    pub fn backward(&self, trace: &Trace, dlogits: &[f64]) -> Result<Vec<Option<Gradients>>, NnError> {
        let mut grads = self.zero_gradients();
        self.backward_into(trace, dlogits, &mut grads)?;
        Ok(grads)
    }

    /// Like [`Network::backward`], but adds into existing buffers from
    /// [`Network::zero_gradients`].
    pub fn backward_into(&self, trace: &Trace, dlogits: &[f64], grads: &mut [Option<Gradients>]) -> Result<(), NnError> {
        let n = self.layers.len();
        if grads.len() != n {
            return Err(NnError::Shape(format!("{} gradient slots for {n} layers", grads.len())));
        }
        let first = match self.first_param_layer() {
            Some(f) => f,
            None => return Ok(()),
        };
        let missing = || NnError::Shape("missing gradient buffer for a parametric layer".into());
        let out_shape = trace.activations[n].shape();
        let mut d = Tensor3::from_vec(out_shape, dlogits.to_vec())?;
        for k in (first..n).rev() {
            let x = &trace.activations[k];
            let need_dx = k > first;
            d = match &self.layers[k] {
                Layer::Conv(p) => {
                    let g = grads[k].as_mut().ok_or_else(missing)?;
                    match conv_backward_impl(x, p, &d, need_dx, g)? {
                        Some(dx) => dx,
                        None => break,
                    }
                }
                Layer::Dense(p) => {
                    let g = grads[k].as_mut().ok_or_else(missing)?;
                    match dense_backward_impl(x.data(), p, d.data(), need_dx, g)? {
                        Some(dx) => Tensor3::from_vec(x.shape(), dx)?,
                        None => break,
                    }
                }
                Layer::Relu => relu_backward(x, &d)?,
                Layer::MaxPool(p) => maxpool_backward(x, p, &d)?,
                Layer::AvgPool(p) => avgpool_backward(x, p, &d)?,
                Layer::Flatten => d.reshape(x.shape())?,
                Layer::Dropout(_) => {
                    let scale = trace.dropout_scales[k]
                        .as_ref()
                        .ok_or_else(|| NnError::Shape("missing dropout scale in trace".into()))?;
                    Tensor3::from_vec(x.shape(), dropout_backward(scale, d.data())?)?
                }
            };
        }
        Ok(())
    }

    /// Softmax cross-entropy loss, class probabilities and parameter
    /// gradients for one sample.
    pub fn loss_and_gradients<R: Rng + ?Sized>(
        &self,
        x: &Tensor3,
        label: usize,
        mode: Mode,
        rng: &mut R,
    ) -> Result<(f64, Vec<f64>, Vec<Option<Gradients>>), NnError> {
        let trace = self.forward(x, mode, rng)?;
        let probs = softmax(trace.logits())?;
        let loss = cross_entropy(&probs, label)?;
        let dlogits = cross_entropy_grad(&probs, label)?;
        let grads = self.backward(&trace, &dlogits)?;
        Ok((loss, probs, grads))
    }

    /// [`Network::loss_and_gradients`] adding the gradients into `grads`.
    pub fn loss_and_accumulate<R: Rng + ?Sized>(
        &self,
        x: &Tensor3,
        label: usize,
        mode: Mode,
        rng: &mut R,
        grads: &mut [Option<Gradients>],
    ) -> Result<(f64, Vec<f64>), NnError> {
        let trace = self.forward(x, mode, rng)?;
        let probs = softmax(trace.logits())?;
        let loss = cross_entropy(&probs, label)?;
        let dlogits = cross_entropy_grad(&probs, label)?;
        self.backward_into(&trace, &dlogits, grads)?;
        Ok((loss, probs))
    }

    /// Eval-mode loss, used by finite-difference checks.
    pub fn loss(&self, x: &Tensor3, label: usize) -> Result<f64, NnError> {
        cross_entropy(&self.probabilities(x)?, label)
    }
}

fn apply<R: Rng + ?Sized>(
    layer: &Layer,
    x: &Tensor3,
    mode: Mode,
    rng: &mut R,
) -> Result<(Tensor3, Option<Vec<f64>>), NnError> {
    Ok(match layer {
        Layer::Conv(p) => (conv_forward(x, p)?, None),
        Layer::Relu => (relu(x), None),
        Layer::MaxPool(p) => (maxpool_forward(x, p)?, None),
        Layer::AvgPool(p) => (avgpool_forward(x, p)?, None),
        Layer::Flatten => (x.clone().flatten(), None),
        Layer::Dense(p) => {
            layer.output_shape(x.shape())?;
            (Tensor3::vector(dense_forward(x.data(), p)?), None)
        }
        Layer::Dropout(rate) => {
            let (out, scale) = dropout(x.data(), *rate, mode, rng)?;
            (Tensor3::from_vec(x.shape(), out)?, Some(scale))
        }
    })
}
