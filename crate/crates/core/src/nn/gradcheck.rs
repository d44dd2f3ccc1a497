//! Central-difference verification of analytic parameter gradients.
//!
//! `L(θ+eps) − L(θ−eps)` is not formed by subtracting two losses. Near
//! `ln 7` a loss carries ~1e-15 of rounding noise, which after dividing by
//! `2·eps` swamps parameters whose true gradient is below ~1e-6. Instead the
//! pass at `θ−eps` runs alongside the exact difference of every activation:
//! linear stages map the difference through their bias-free part, ReLU and
//! max-pool compare the two perturbed activations directly, and the loss
//! difference uses `ln_1p`/`exp_m1`. In exact arithmetic this is the same
//! quantity, kinks included.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::activation::{cross_entropy, cross_entropy_grad, relu, softmax, PROB_FLOOR};
use super::conv::conv_forward;
use super::dense::dense_forward;
use super::dropout::Mode;
use super::network::{Layer, Network};
use super::pool::{avgpool_forward, maxpool_forward, window_argmax};
use super::tensor::Tensor3;
use super::NnError;

/// Parameters sampled per layer (all of them when a layer has fewer).
pub const SAMPLES_PER_LAYER: usize = 200;
/// Pairs where both gradients are below this magnitude are not compared.
pub const SKIP_BELOW: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LayerCheck {
    pub layer: usize,
    pub kind: &'static str,
    pub compared: usize,
    pub skipped: usize,
    pub max_rel_error: f64,
    /// `(analytic, numeric)` for every compared parameter.
    pub pairs: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub layers: Vec<LayerCheck>,
}

impl GradCheckReport {
    pub fn compared(&self) -> usize {
        self.layers.iter().map(|l| l.compared).sum()
    }
}

/// `|a - n| / max(|a|, |n|)`, or `None` when both are negligible.
pub fn relative_error(analytic: f64, numeric: f64) -> Option<f64> {
    let scale = analytic.abs().max(numeric.abs());
    if scale < SKIP_BELOW {
        None
    } else {
        Some((analytic - numeric).abs() / scale)
    }
}

pub fn gradient_check(net: &Network, input: &Tensor3, label: usize, eps: f64) -> Result<GradCheckReport, NnError> {
    gradient_check_with(net, input, label, eps, SAMPLES_PER_LAYER, 0x9e37_79b9)
}

/// Compares backpropagated gradients against
/// `(L(θ+eps) − L(θ−eps)) / (2·eps)` in eval mode (dropout off) on a seeded
/// sample of each parametric layer's weights and biases.
pub fn gradient_check_with(
    net: &Network,
    input: &Tensor3,
    label: usize,
    eps: f64,
    samples_per_layer: usize,
    seed: u64,
) -> Result<GradCheckReport, NnError> {
    if !(eps > 0.0) {
        return Err(NnError::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trace = net.forward(input, Mode::Eval, &mut rng)?;
    let probs = softmax(trace.logits())?;
    let dlogits = cross_entropy_grad(&probs, label)?;
    let analytic = net.backward(&trace, &dlogits)?;
    let linear: Vec<Option<Layer>> = net.layers.iter().map(bias_free).collect();

    let mut work = net.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        layers: Vec::new(),
    };
    for k in 0..net.layers.len() {
        let Some(grad) = analytic[k].as_ref() else { continue };
        let n_w = grad.weights.len();
        let total = n_w + grad.bias.len();
        let picks = sample(&mut rng, total, samples_per_layer.min(total)).into_vec();
        let mut check = LayerCheck {
            layer: k,
            kind: net.layers[k].name(),
            compared: 0,
            skipped: 0,
            max_rel_error: 0.0,
            pairs: Vec::new(),
        };
        let x = &trace.activations[k];
        for idx in picks {
            let a = if idx < n_w { grad.weights[idx] } else { grad.bias[idx - n_w] };
            let orig = param_at(&work, k, idx, n_w);
            set_param(&mut work, k, idx, n_w, orig - eps);
            let low = apply_eval(&work.layers[k], x)?;
            let diff = perturbation_delta(&net.layers[k], x, idx, n_w, 2.0 * eps)?;
            let numeric = loss_difference(&work, &linear, k + 1, low, diff, label)? / (2.0 * eps);
            set_param(&mut work, k, idx, n_w, orig);
            match relative_error(a, numeric) {
                Some(r) => {
                    check.compared += 1;
                    check.max_rel_error = check.max_rel_error.max(r);
                    check.pairs.push((a, numeric));
                }
                None => check.skipped += 1,
            }
        }
        report.max_rel_error = report.max_rel_error.max(check.max_rel_error);
        report.layers.push(check);
    }
    Ok(report)
}

/// The linear part of a parametric layer (its bias zeroed).
fn bias_free(layer: &Layer) -> Option<Layer> {
    let mut l = layer.clone();
    let (_, b) = l.params_mut()?;
    b.iter_mut().for_each(|v| *v = 0.0);
    Some(l)
}

fn apply_eval(layer: &Layer, x: &Tensor3) -> Result<Tensor3, NnError> {
    Ok(match layer {
        Layer::Conv(p) => conv_forward(x, p)?,
        Layer::Dense(p) => Tensor3::vector(dense_forward(x.data(), p)?),
        Layer::Relu => relu(x),
        Layer::MaxPool(p) => maxpool_forward(x, p)?,
        Layer::AvgPool(p) => avgpool_forward(x, p)?,
        Layer::Flatten => x.clone().flatten(),
        Layer::Dropout(_) => x.clone(),
    })
}

/// Output of `layer` at `θ_idx + step` minus output at `θ_idx`; the layer is
/// affine in each parameter, so this is `step` times the parameter's
/// partial derivative.
fn perturbation_delta(layer: &Layer, x: &Tensor3, idx: usize, n_w: usize, step: f64) -> Result<Tensor3, NnError> {
    let out_shape = layer.output_shape(x.shape())?;
    let mut d = Tensor3::zeros(out_shape);
    match layer {
        Layer::Conv(p) => {
            let o = if idx < n_w { idx % p.out_ch } else { idx - n_w };
            let (i, j, c) = if idx < n_w {
                let r = idx / p.out_ch;
                (r / (p.kw * p.in_ch), (r / p.in_ch) % p.kw, r % p.in_ch)
            } else {
                (0, 0, 0)
            };
            for u in 0..out_shape.d1 {
                for v in 0..out_shape.d2 {
                    let g = if idx < n_w { x.get(u + i, v + j, c) } else { 1.0 };
                    d.set(u, v, o, step * g);
                }
            }
        }
        Layer::Dense(p) => {
            if idx < n_w {
                d.data_mut()[idx % p.outputs] = step * x.data()[idx / p.outputs];
            } else {
                d.data_mut()[idx - n_w] = step;
            }
        }
        _ => return Err(NnError::InvalidParameter(format!("{} has no parameters", layer.name()))),
    }
    Ok(d)
}

/// `L(hi) − L(lo)` where layer `start` receives `lo` and `lo + diff`.
fn loss_difference(
    net: &Network,
    linear: &[Option<Layer>],
    start: usize,
    mut lo: Tensor3,
    mut diff: Tensor3,
    label: usize,
) -> Result<f64, NnError> {
    for (k, layer) in net.layers.iter().enumerate().skip(start) {
        let next_diff = match layer {
            Layer::Conv(_) | Layer::Dense(_) => {
                apply_eval(linear[k].as_ref().expect("parametric layer"), &diff)?
            }
            Layer::AvgPool(_) | Layer::Flatten | Layer::Dropout(_) => apply_eval(layer, &diff)?,
            Layer::Relu => {
                let mut d = diff.clone();
                for (dv, &y) in d.data_mut().iter_mut().zip(lo.data()) {
                    let hi = y + *dv;
                    *dv = match (y > 0.0, hi > 0.0) {
                        (true, true) => *dv,
                        (false, false) => 0.0,
                        (true, false) => -y,
                        (false, true) => hi,
                    };
                }
                d
            }
            Layer::MaxPool(p) => {
                let mut hi = lo.clone();
                for (h, dv) in hi.data_mut().iter_mut().zip(diff.data()) {
                    *h += dv;
                }
                let os = p.output_shape(lo.shape())?;
                let mut d = Tensor3::zeros(os);
                for u in 0..os.d1 {
                    for v in 0..os.d2 {
                        for c in 0..os.channels {
                            let a = window_argmax(&lo, p, u, v, c);
                            let b = window_argmax(&hi, p, u, v, c);
                            let val = if a == b { diff.data()[a] } else { hi.data()[b] - lo.data()[a] };
                            d.set(u, v, c, val);
                        }
                    }
                }
                d
            }
        };
        lo = apply_eval(layer, &lo)?;
        diff = next_diff;
    }

    let z = lo.data();
    let dz = diff.data();
    let p = softmax(z)?;
    let hi: Vec<f64> = z.iter().zip(dz).map(|(a, b)| a + b).collect();
    let p_hi = softmax(&hi)?;
    if p[label] < PROB_FLOOR || p_hi[label] < PROB_FLOOR {
        // the floor clips the loss; fall back to the plain difference
        return Ok(cross_entropy(&p_hi, label)? - cross_entropy(&p, label)?);
    }
    // ln Σ e^{z+dz} − ln Σ e^z = ln(1 + Σ p_i (e^{dz_i} − 1))
    let ratio: f64 = p.iter().zip(dz).map(|(pi, d)| pi * d.exp_m1()).sum();
    Ok(ratio.ln_1p() - dz[label])
}

fn param_at(net: &Network, k: usize, idx: usize, n_w: usize) -> f64 {
    let (w, b) = net.layers[k].params().expect("parametric layer");
    if idx < n_w {
        w[idx]
    } else {
        b[idx - n_w]
    }
}

fn set_param(net: &mut Network, k: usize, idx: usize, n_w: usize, value: f64) {
    let (w, b) = net.layers[k].params_mut().expect("parametric layer");
    if idx < n_w {
        w[idx] = value;
    } else {
        b[idx - n_w] = value;
    }
}
