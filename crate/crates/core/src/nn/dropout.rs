use rand::Rng;

use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Inverted dropout. Returns the output and the per-element scale
/// (0 or `1/(1-rate)`) for use in the backward pass. One uniform draw is
/// consumed per element in train mode; none in eval mode.
pub fn dropout<R: Rng + ?Sized>(
    x: &[f64],
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>), NnError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NnError::InvalidParameter(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    if mode == Mode::Eval || rate == 0.0 {
        return Ok((x.to_vec(), vec![1.0; x.len()]));
    }
    let keep = 1.0 / (1.0 - rate);
    let scale: Vec<f64> = (0..x.len())
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect();
    let out = x.iter().zip(&scale).map(|(v, s)| v * s).collect();
    Ok((out, scale))
}

pub fn dropout_backward(scale: &[f64], dout: &[f64]) -> Result<Vec<f64>, NnError> {
    if scale.len() != dout.len() {
        return Err(NnError::Shape(format!(
            "dropout mask length {} vs gradient length {}",
            scale.len(),
            dout.len()
        )));
    }
    Ok(dout.iter().zip(scale).map(|(d, s)| d * s).collect())
}
