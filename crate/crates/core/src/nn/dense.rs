use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::tensor::{axpy, dot};
use super::{Gradients, NnError};

/// Fully connected layer, weights laid out `(in, out)` with the output
/// unit fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseParams {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    pub fn he_init<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(inputs, outputs);
        let normal = Normal::new(0.0, (2.0 / inputs as f64).sqrt()).expect("positive std");
        for w in &mut p.weights {
            *w = normal.sample(rng);
        }
        p
    }

    fn check(&self, input_len: usize) -> Result<(), NnError> {
        if self.weights.len() != self.inputs * self.outputs || self.bias.len() != self.outputs {
            return Err(NnError::Shape("dense parameter buffers disagree with extents".into()));
        }
        if input_len != self.inputs {
            return Err(NnError::Shape(format!(
                "dense layer expects {} inputs, got {input_len}",
                self.inputs
            )));
        }
        Ok(())
    }
}

/// `out = Wᵀx + b`
pub fn dense_forward(x: &[f64], p: &DenseParams) -> Result<Vec<f64>, NnError> {
    p.check(x.len())?;
    let mut out = p.bias.clone();
    for (i, &xv) in x.iter().enumerate() {
        if xv != 0.0 {
            axpy(&mut out, xv, &p.weights[i * p.outputs..(i + 1) * p.outputs]);
        }
    }
    Ok(out)
}

pub fn dense_backward(x: &[f64], p: &DenseParams, dout: &[f64]) -> Result<(Vec<f64>, Gradients), NnError> {
    let mut g = Gradients::zeros(p.weights.len(), p.outputs);
    let dx = dense_backward_impl(x, p, dout, true, &mut g)?;
    Ok((dx.expect("input gradient requested"), g))
}

/// Adds the parameter gradients into `g` and returns the input gradient
/// when `need_dx`.
pub(crate) fn dense_backward_impl(
    x: &[f64],
    p: &DenseParams,
    dout: &[f64],
    need_dx: bool,
    g: &mut Gradients,
) -> Result<Option<Vec<f64>>, NnError> {
    p.check(x.len())?;
    if dout.len() != p.outputs {
        return Err(NnError::Shape(format!(
            "dense output gradient has length {}, expected {}",
            dout.len(),
            p.outputs
        )));
    }
    if g.weights.len() != p.weights.len() || g.bias.len() != p.outputs {
        return Err(NnError::Shape("dense gradient buffers disagree with extents".into()));
    }
    axpy(&mut g.bias, 1.0, dout);
    for (i, &xv) in x.iter().enumerate() {
        if xv != 0.0 {
            axpy(&mut g.weights[i * p.outputs..(i + 1) * p.outputs], xv, dout);
        }
    }
    let dx = need_dx.then(|| {
        (0..p.inputs)
            .map(|i| dot(&p.weights[i * p.outputs..(i + 1) * p.outputs], dout))
            .collect()
    });
    Ok(dx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights() {
        let mut p = DenseParams::zeros(3, 3);
        for i in 0..3 {
            p.weights[i * 3 + i] = 1.0;
        }
        assert_eq!(dense_forward(&[1.0, -2.0, 0.5], &p).unwrap(), vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn length_mismatch() {
        let p = DenseParams::zeros(4, 2);
        assert!(matches!(dense_forward(&[1.0; 3], &p), Err(NnError::Shape(_))));
        assert!(dense_backward(&[1.0; 4], &p, &[1.0; 3]).is_err());
    }
}
