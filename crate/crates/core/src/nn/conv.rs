use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::tensor::{axpy, Shape, Tensor3};
use super::{Gradients, NnError};

/// Valid 2D convolution parameters. Weights are laid out `(kh, kw, in, out)`
/// with the output channel fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub kh: usize,
    pub kw: usize,
    pub in_ch: usize,
    pub out_ch: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvParams {
    pub fn zeros(kh: usize, kw: usize, in_ch: usize, out_ch: usize) -> Self {
        Self {
            kh,
            kw,
            in_ch,
            out_ch,
            weights: vec![0.0; kh * kw * in_ch * out_ch],
            bias: vec![0.0; out_ch],
        }
    }

    /// Zero-mean Gaussian weights with std `sqrt(2 / fan_in)`, zero bias.
    pub fn he_init<R: Rng + ?Sized>(kh: usize, kw: usize, in_ch: usize, out_ch: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(kh, kw, in_ch, out_ch);
        let std = (2.0 / (kh * kw * in_ch) as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("positive std");
        for w in &mut p.weights {
            *w = normal.sample(rng);
        }
        p
    }

    #[inline]
    pub fn weight_index(&self, i: usize, j: usize, c: usize, o: usize) -> usize {
        ((i * self.kw + j) * self.in_ch + c) * self.out_ch + o
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape, NnError> {
        if input.channels != self.in_ch {
            return Err(NnError::Shape(format!(
                "conv expects {} input channels, got {input}",
                self.in_ch
            )));
        }
        if self.kh == 0 || self.kw == 0 || self.kh > input.d1 || self.kw > input.d2 {
            return Err(NnError::Shape(format!(
                "conv kernel {}x{} does not fit input {input}",
                self.kh, self.kw
            )));
        }
        Ok(Shape::new(input.d1 - self.kh + 1, input.d2 - self.kw + 1, self.out_ch))
    }

    fn check(&self) -> Result<(), NnError> {
        if self.weights.len() != self.kh * self.kw * self.in_ch * self.out_ch || self.bias.len() != self.out_ch {
            return Err(NnError::Shape("conv parameter buffers disagree with extents".into()));
        }
        Ok(())
    }
}

/// `out[u,v,o] = bias[o] + Σ_{i,j,c} x[u+i, v+j, c] · w[i,j,c,o]`
pub fn conv_forward(x: &Tensor3, p: &ConvParams) -> Result<Tensor3, NnError> {
    p.check()?;
    let os = p.output_shape(x.shape())?;
    let is = x.shape();
    let (ic, oc) = (p.in_ch, p.out_ch);
    let xd = x.data();
    let mut out = Tensor3::zeros(os);
    let od = out.data_mut();
    for u in 0..os.d1 {
        for v in 0..os.d2 {
            let obase = (u * os.d2 + v) * oc;
            let orow = &mut od[obase..obase + oc];
            orow.copy_from_slice(&p.bias);
            for i in 0..p.kh {
                for j in 0..p.kw {
                    let xbase = ((u + i) * is.d2 + v + j) * ic;
                    let wbase = (i * p.kw + j) * ic * oc;
                    for c in 0..ic {
                        let xv = xd[xbase + c];
                        if xv != 0.0 {
                            axpy(orow, xv, &p.weights[wbase + c * oc..wbase + (c + 1) * oc]);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradients of [`conv_forward`] with respect to its input and parameters.
pub fn conv_backward(x: &Tensor3, p: &ConvParams, dout: &Tensor3) -> Result<(Tensor3, Gradients), NnError> {
    let mut g = Gradients::zeros(p.weights.len(), p.out_ch);
    let dx = conv_backward_impl(x, p, dout, true, &mut g)?;
    Ok((dx.expect("input gradient requested"), g))
}

/// Adds the parameter gradients into `g` and returns the input gradient
/// when `need_dx`.
pub(crate) fn conv_backward_impl(
    x: &Tensor3,
    p: &ConvParams,
    dout: &Tensor3,
    need_dx: bool,
    g: &mut Gradients,
) -> Result<Option<Tensor3>, NnError> {
    p.check()?;
    let os = p.output_shape(x.shape())?;
    if dout.shape() != os {
        return Err(NnError::Shape(format!(
            "conv output gradient has shape {}, expected {os}",
            dout.shape()
        )));
    }
    let is = x.shape();
    let (ic, oc) = (p.in_ch, p.out_ch);
    let xd = x.data();
    let dd = dout.data();
    if g.weights.len() != p.weights.len() || g.bias.len() != oc {
        return Err(NnError::Shape("conv gradient buffers disagree with extents".into()));
    }
    // kernel as (i, j, o, c) so the input gradient is a run of axpys over
    // input channels, skipping zero upstream entries
    let wt = need_dx.then(|| {
        let mut wt = vec![0.0; p.weights.len()];
        for ij in 0..p.kh * p.kw {
            for c in 0..ic {
                for o in 0..oc {
                    wt[(ij * oc + o) * ic + c] = p.weights[(ij * ic + c) * oc + o];
                }
            }
        }
        wt
    });
    let mut dx = need_dx.then(|| Tensor3::zeros(is));
    for u in 0..os.d1 {
        for v in 0..os.d2 {
            let dbase = (u * os.d2 + v) * oc;
            let drow = &dd[dbase..dbase + oc];
            if drow.iter().all(|&d| d == 0.0) {
                continue;
            }
            axpy(&mut g.bias, 1.0, drow);
            for i in 0..p.kh {
                for j in 0..p.kw {
                    let xbase = ((u + i) * is.d2 + v + j) * ic;
                    let wbase = (i * p.kw + j) * ic * oc;
                    for c in 0..ic {
                        let xv = xd[xbase + c];
                        if xv != 0.0 {
                            axpy(&mut g.weights[wbase + c * oc..wbase + (c + 1) * oc], xv, drow);
                        }
                    }
                    if let (Some(dx), Some(wt)) = (dx.as_mut(), wt.as_ref()) {
                        let dxs = &mut dx.data_mut()[xbase..xbase + ic];
                        for (o, &d) in drow.iter().enumerate() {
                            if d != 0.0 {
                                axpy(dxs, d, &wt[wbase + o * ic..wbase + (o + 1) * ic]);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(dx)
}
