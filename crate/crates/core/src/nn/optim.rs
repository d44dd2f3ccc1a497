use super::NnError;

/// SGD with classical momentum: `v ← μ·v + g; θ ← θ − lr·v`.
pub fn sgd_step(
    params: &mut [f64],
    grads: &[f64],
    velocity: &mut [f64],
    lr: f64,
    momentum: f64,
) -> Result<(), NnError> {
    if params.len() != grads.len() || params.len() != velocity.len() {
        return Err(NnError::Shape(format!(
            "sgd buffers disagree: params {}, grads {}, velocity {}",
            params.len(),
            grads.len(),
            velocity.len()
        )));
    }
    if !(lr > 0.0) || !(0.0..1.0).contains(&momentum) {
        return Err(NnError::InvalidParameter(format!(
            "sgd needs lr > 0 and momentum in [0, 1), got lr={lr} momentum={momentum}"
        )));
    }
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = momentum * *v + g;
        *p -= lr * *v;
    }
    Ok(())
}
