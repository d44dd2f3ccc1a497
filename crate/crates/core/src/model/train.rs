use std::cell::RefCell;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{batches, Dataset};
use crate::nn::{sgd_step, ConvParams, DenseParams, Gradients, Layer, Mode, Network};
use crate::seed::{child_seed, indexed_seed};

use super::spec::{infer_shapes, realize, NetworkSpec};
use super::ModelError;

/// A network together with its optimizer state and training metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub spec: NetworkSpec,
    pub net: Network,
    /// Momentum buffers, one per parametric layer of `net`.
    pub velocity: Vec<Option<Gradients>>,
    pub seed: u64,
    pub epochs_completed: u32,
}

impl NetworkState {
    /// He-initialized weights and zero biases drawn from `seed`.
    pub fn init(spec: NetworkSpec, seed: u64) -> Result<Self, ModelError> {
        let rng = RefCell::new(ChaCha8Rng::seed_from_u64(child_seed(seed, "init")));
        let layers = realize(
            &spec,
            |kh, kw, c, o| ConvParams::he_init(kh, kw, c, o, &mut *rng.borrow_mut()),
            |i, o| DenseParams::he_init(i, o, &mut *rng.borrow_mut()),
        )?;
        Self::from_layers(spec, layers, seed, 0)
    }

    /// Wraps existing layers, checking them against `spec`.
    pub fn from_layers(spec: NetworkSpec, layers: Vec<Layer>, seed: u64, epochs_completed: u32) -> Result<Self, ModelError> {
        let expected = realize(&spec, ConvParams::zeros, DenseParams::zeros)?;
        if expected.len() != layers.len()
            || expected.iter().zip(&layers).any(|(a, b)| !same_structure(a, b))
        {
            return Err(ModelError::Shape("layers do not match the network spec".into()));
        }
        let net = Network::new(spec.input, layers)?;
        let velocity = net.zero_gradients();
        Ok(Self {
            spec,
            net,
            velocity,
            seed,
            epochs_completed,
        })
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count()
    }
}

fn same_structure(a: &Layer, b: &Layer) -> bool {
    match (a, b) {
        (Layer::Conv(x), Layer::Conv(y)) => {
            (x.kh, x.kw, x.in_ch, x.out_ch) == (y.kh, y.kw, y.in_ch, y.out_ch)
                && y.weights.len() == x.weights.len()
                && y.bias.len() == x.bias.len()
        }
        (Layer::Dense(x), Layer::Dense(y)) => {
            (x.inputs, x.outputs) == (y.inputs, y.outputs)
                && y.weights.len() == x.weights.len()
                && y.bias.len() == x.bias.len()
        }
        _ => a == b,
    }
}


#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: u32,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    pub shuffle: bool,
    /// Worker count for gradient accumulation. Results do not depend on it.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 100,
            epochs: 100,
            learning_rate: 0.01,
            momentum: 0.9,
            seed: 0,
            shuffle: true,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.batch_size == 0 {
            return Err(ModelError::Config("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(ModelError::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(ModelError::Config(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if self.threads == 0 {
            return Err(ModelError::Config("threads must be >= 1".into()));
        }
        Ok(())
    }
}

/// Mean training loss and train-mode accuracy over one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: u32,
    pub loss: f64,
    pub accuracy: f64,
}

/// Each batch is split into this many contiguous shards whose gradient sums
/// are added in shard order, whatever the thread count.
const GRADIENT_SHARDS: usize = 4;

struct Partial {
    loss: f64,
    correct: usize,
    grads: Vec<Option<Gradients>>,
}

fn accumulate(
    net: &Network,
    data: &Dataset,
    idx: &[usize],
    seed: u64,
    epoch: u32,
) -> Result<Partial, ModelError> {
    let mut acc = Partial {
        loss: 0.0,
        correct: 0,
        grads: net.zero_gradients(),
    };
    for &i in idx {
        let s = &data.samples[i];
        let mut rng = ChaCha8Rng::seed_from_u64(indexed_seed(seed, "dropout", (u64::from(epoch) << 32) | i as u64));
        let (loss, probs) = net.loss_and_accumulate(&s.input, s.label.index(), Mode::Train, &mut rng, &mut acc.grads)?;
        acc.loss += loss;
        if super::predict::argmax(&probs) == s.label.index() {
            acc.correct += 1;
        }
    }
    Ok(acc)
}

/// Minibatch SGD with momentum over `data` for `cfg.epochs` epochs. Each
/// step uses the mean gradient of its batch; the final short batch of an
/// epoch is kept.
pub fn train(state: &mut NetworkState, data: &Dataset, cfg: &TrainConfig) -> Result<Vec<EpochStats>, ModelError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(ModelError::InvalidInput("training set is empty".into()));
    }
    if let Some(s) = data.samples.iter().find(|s| s.input.shape() != state.net.input) {
        return Err(ModelError::Shape(format!(
            "sample shape {} does not match network input {}",
            s.input.shape(),
            state.net.input
        )));
    }
    infer_shapes(&state.spec)?;

    let pool = if cfg.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build()
                .map_err(|e| ModelError::Config(e.to_string()))?,
        )
    } else {
        None
    };

    let n = data.len();
    let mut history = Vec::with_capacity(cfg.epochs as usize);
    for _ in 0..cfg.epochs {
        let epoch = state.epochs_completed;
        let order = batches(n, cfg.batch_size, indexed_seed(cfg.seed, "shuffle", u64::from(epoch)), cfg.shuffle);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for batch in &order {
            let shard = batch.len().div_ceil(GRADIENT_SHARDS);
            let run = || {
                batch
                    .par_chunks(shard)
                    .map(|chunk| accumulate(&state.net, data, chunk, cfg.seed, epoch))
                    .collect::<Result<Vec<_>, _>>()
            };
            let parts = match &pool {
                Some(pool) => pool.install(run)?,
                None => batch
                    .chunks(shard)
                    .map(|chunk| accumulate(&state.net, data, chunk, cfg.seed, epoch))
                    .collect::<Result<Vec<_>, _>>()?,
            };
            let mut parts = parts.into_iter();
            let mut partial = parts.next().expect("batch is non-empty");
            for p in parts {
                partial.loss += p.loss;
                partial.correct += p.correct;
                for (a, g) in partial.grads.iter_mut().zip(&p.grads) {
                    if let (Some(a), Some(g)) = (a.as_mut(), g) {
                        a.add_assign(g);
                    }
                }
            }
            loss_sum += partial.loss;
            correct += partial.correct;
            let inv = 1.0 / batch.len() as f64;
            for ((layer, g), v) in state.net.layers.iter_mut().zip(partial.grads).zip(state.velocity.iter_mut()) {
                if let (Some((w, b)), Some(mut g), Some(v)) = (layer.params_mut(), g, v.as_mut()) {
                    g.scale(inv);
                    sgd_step(w, &g.weights, &mut v.weights, cfg.learning_rate, cfg.momentum)?;
                    sgd_step(b, &g.bias, &mut v.bias, cfg.learning_rate, cfg.momentum)?;
                }
            }
        }
        state.epochs_completed += 1;
        history.push(EpochStats {
            epoch: state.epochs_completed,
            loss: loss_sum / n as f64,
            accuracy: correct as f64 / n as f64,
        });
    }
    Ok(history)
}
