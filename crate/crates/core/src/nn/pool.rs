use super::tensor::{Shape, Tensor3};
use super::NnError;

/// Window extents and strides along `(d1, d2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pool2 {
    pub pool: (usize, usize),
    pub stride: (usize, usize),
}

impl Pool2 {
    pub const fn new(pool: (usize, usize), stride: (usize, usize)) -> Self {
        Self { pool, stride }
    }

    /// Floor-division output extents.
    pub fn output_shape(&self, input: Shape) -> Result<Shape, NnError> {
        let (ph, pw) = self.pool;
        let (sh, sw) = self.stride;
        if ph == 0 || pw == 0 || sh == 0 || sw == 0 {
            return Err(NnError::Shape("pool and stride extents must be >= 1".into()));
        }
        if ph > input.d1 || pw > input.d2 {
            return Err(NnError::Shape(format!(
                "pool {ph}x{pw} does not fit input {input}"
            )));
        }
        Ok(Shape::new(
            (input.d1 - ph) / sh + 1,
            (input.d2 - pw) / sw + 1,
            input.channels,
        ))
    }
}

/// Index into `x` of the first maximum in the window for output `(u, v, c)`,
/// scanning the window row-major.
#[inline]
pub(crate) fn window_argmax(x: &Tensor3, p: &Pool2, u: usize, v: usize, c: usize) -> usize {
    let (u0, v0) = (u * p.stride.0, v * p.stride.1);
    let mut best = x.index(u0, v0, c);
    let mut best_val = x.data()[best];
    for i in 0..p.pool.0 {
        for j in 0..p.pool.1 {
            let k = x.index(u0 + i, v0 + j, c);
            if x.data()[k] > best_val {
                best_val = x.data()[k];
                best = k;
            }
        }
    }
    best
}

pub fn maxpool_forward(x: &Tensor3, p: &Pool2) -> Result<Tensor3, NnError> {
    let os = p.output_shape(x.shape())?;
    let mut out = Tensor3::zeros(os);
    for u in 0..os.d1 {
        for v in 0..os.d2 {
            for c in 0..os.channels {
                let k = window_argmax(x, p, u, v, c);
                out.set(u, v, c, x.data()[k]);
            }
        }
    }
    Ok(out)
}

/// Routes each output gradient to its window's argmax (first on ties).
pub fn maxpool_backward(x: &Tensor3, p: &Pool2, dout: &Tensor3) -> Result<Tensor3, NnError> {
    let os = p.output_shape(x.shape())?;
    check_dout(dout, os)?;
    let mut dx = Tensor3::zeros(x.shape());
    for u in 0..os.d1 {
        for v in 0..os.d2 {
            for c in 0..os.channels {
                let k = window_argmax(x, p, u, v, c);
                dx.data_mut()[k] += dout.get(u, v, c);
            }
        }
    }
    Ok(dx)
}

pub fn avgpool_forward(x: &Tensor3, p: &Pool2) -> Result<Tensor3, NnError> {
    let os = p.output_shape(x.shape())?;
    let area = (p.pool.0 * p.pool.1) as f64;
    let ch = os.channels;
    let mut out = Tensor3::zeros(os);
    let mut acc = vec![0.0; ch];
    for u in 0..os.d1 {
        for v in 0..os.d2 {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for i in 0..p.pool.0 {
                for j in 0..p.pool.1 {
                    let base = x.index(u * p.stride.0 + i, v * p.stride.1 + j, 0);
                    for (a, xv) in acc.iter_mut().zip(&x.data()[base..base + ch]) {
                        *a += xv;
                    }
                }
            }
            let obase = out.index(u, v, 0);
            for (o, a) in out.data_mut()[obase..obase + ch].iter_mut().zip(&acc) {
                *o = a / area;
            }
        }
    }
    Ok(out)
}

/// Spreads each output gradient uniformly over its window.
pub fn avgpool_backward(x: &Tensor3, p: &Pool2, dout: &Tensor3) -> Result<Tensor3, NnError> {
    let os = p.output_shape(x.shape())?;
    check_dout(dout, os)?;
    let area = (p.pool.0 * p.pool.1) as f64;
    let ch = os.channels;
    let mut dx = Tensor3::zeros(x.shape());
    for u in 0..os.d1 {
        for v in 0..os.d2 {
            let dbase = dout.index(u, v, 0);
            for i in 0..p.pool.0 {
                for j in 0..p.pool.1 {
                    let base = dx.index(u * p.stride.0 + i, v * p.stride.1 + j, 0);
                    let drow = &dout.data()[dbase..dbase + ch];
                    for (d, g) in dx.data_mut()[base..base + ch].iter_mut().zip(drow) {
                        *d += g / area;
                    }
                }
            }
        }
    }
    Ok(dx)
}

fn check_dout(dout: &Tensor3, expected: Shape) -> Result<(), NnError> {
    if dout.shape() != expected {
        return Err(NnError::Shape(format!(
            "pool output gradient has shape {}, expected {expected}",
            dout.shape()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_pool_shapes() {
        let max = Pool2::new((5, 5), (2, 2));
        let avg = Pool2::new((3, 3), (2, 2));
        assert_eq!(max.output_shape(Shape::new(76, 96, 64)).unwrap(), Shape::new(36, 46, 64));
        assert_eq!(avg.output_shape(Shape::new(32, 42, 64)).unwrap(), Shape::new(15, 20, 64));
        assert_eq!(avg.output_shape(Shape::new(11, 16, 128)).unwrap(), Shape::new(5, 7, 128));
    }

    #[test]
    fn pool_larger_than_input() {
        let p = Pool2::new((3, 3), (2, 2));
        let x = Tensor3::zeros(Shape::new(2, 4, 1));
        assert!(matches!(maxpool_forward(&x, &p), Err(NnError::Shape(_))));
        assert!(matches!(avgpool_forward(&x, &p), Err(NnError::Shape(_))));
    }

    #[test]
    fn quadrant_maxima() {
        let x = Tensor3::from_vec(
            Shape::new(4, 4, 1),
            vec![1., 5., 2., 0., 3., 4., 8., 1., 0., 0., 7., 7., 9., 1., 6., 2.],
        )
        .unwrap();
        let out = maxpool_forward(&x, &Pool2::new((2, 2), (2, 2))).unwrap();
        assert_eq!(out.data(), &[5., 8., 9., 7.]);
    }

    #[test]
    fn max_backward_first_tie() {
        let x = Tensor3::from_vec(Shape::new(2, 2, 1), vec![3., 3., 3., 3.]).unwrap();
        let p = Pool2::new((2, 2), (2, 2));
        let dout = Tensor3::from_vec(Shape::new(1, 1, 1), vec![2.5]).unwrap();
        let dx = maxpool_backward(&x, &p, &dout).unwrap();
        assert_eq!(dx.data(), &[2.5, 0., 0., 0.]);
    }

    #[test]
    fn avg_of_one_to_nine() {
        let x = Tensor3::from_vec(Shape::new(3, 3, 1), (1..=9).map(f64::from).collect()).unwrap();
        let out = avgpool_forward(&x, &Pool2::new((3, 3), (2, 2))).unwrap();
        assert_eq!(out.data(), &[5.0]);
    }

    #[test]
    fn constant_input_constant_output() {
        let x = Tensor3::from_vec(Shape::new(7, 6, 2), vec![1.25; 84]).unwrap();
        let p = Pool2::new((3, 2), (2, 1));
        assert!(maxpool_forward(&x, &p).unwrap().data().iter().all(|&v| v == 1.25));
        assert!(avgpool_forward(&x, &p).unwrap().data().iter().all(|&v| v == 1.25));
    }
}
