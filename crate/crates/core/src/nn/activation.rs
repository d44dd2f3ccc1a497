use super::tensor::Tensor3;
use super::NnError;

/// Probability floor applied before taking the log in the loss.
pub const PROB_FLOOR: f64 = 1e-12;

pub fn relu(x: &Tensor3) -> Tensor3 {
    let mut out = x.clone();
    out.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
    out
}

/// Passes `dout` where `x > 0`; the gradient at exactly zero is zero.
pub fn relu_backward(x: &Tensor3, dout: &Tensor3) -> Result<Tensor3, NnError> {
    if x.shape() != dout.shape() {
        return Err(NnError::Shape(format!(
            "relu gradient shape {} does not match input {}",
            dout.shape(),
            x.shape()
        )));
    }
    let mut dx = dout.clone();
    for (d, &xv) in dx.data_mut().iter_mut().zip(x.data()) {
        if xv <= 0.0 {
            *d = 0.0;
        }
    }
    Ok(dx)
}

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>, NnError> {
    if logits.is_empty() {
        return Err(NnError::InvalidInput("softmax of an empty vector".into()));
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(NnError::InvalidInput("softmax input is not finite".into()));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// `-ln(max(probs[label], 1e-12))`.
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64, NnError> {
    let p = probs.get(label).ok_or_else(|| {
        NnError::InvalidParameter(format!("label {label} out of range for {} classes", probs.len()))
    })?;
    Ok(-p.max(PROB_FLOOR).ln())
}

/// Gradient of softmax cross-entropy with respect to the logits:
/// `probs - onehot(label)`.
pub fn cross_entropy_grad(probs: &[f64], label: usize) -> Result<Vec<f64>, NnError> {
    if label >= probs.len() {
        return Err(NnError::InvalidParameter(format!(
            "label {label} out of range for {} classes",
            probs.len()
        )));
    }
    let mut g = probs.to_vec();
    g[label] -= 1.0;
    Ok(g)
}
