use std::fmt;

use super::NnError;

/// Extents of a rank-3 activation `(d1, d2, channels)`.
///
/// Flat vectors are represented as `(1, 1, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub d1: usize,
    pub d2: usize,
    pub channels: usize,
}

impl Shape {
    pub const fn new(d1: usize, d2: usize, channels: usize) -> Self {
        Self { d1, d2, channels }
    }

    pub const fn vector(n: usize) -> Self {
        Self::new(1, 1, n)
    }

    pub const fn len(&self) -> usize {
        self.d1 * self.d2 * self.channels
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn is_vector(&self) -> bool {
        self.d1 == 1 && self.d2 == 1
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.d1, self.d2, self.channels)
    }
}

/// Rank-3 real tensor, d1-major and channel-minor:
/// element `(u, v, c)` lives at `(u * d2 + v) * channels + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    shape: Shape,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(shape: Shape) -> Self {
        Self {
            shape,
            data: vec![0.0; shape.len()],
        }
    }

    pub fn from_vec(shape: Shape, data: Vec<f64>) -> Result<Self, NnError> {
        if shape.d1 == 0 || shape.d2 == 0 || shape.channels == 0 {
            return Err(NnError::Shape(format!("tensor extents must be >= 1, got {shape}")));
        }
        if data.len() != shape.len() {
            return Err(NnError::Shape(format!(
                "{} values cannot fill shape {shape}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Self {
            shape: Shape::vector(data.len()),
            data,
        }
    }

    #[inline]
    pub fn shape(&self) -> Shape {
        self.shape
    }

    #[inline]
    pub fn index(&self, u: usize, v: usize, c: usize) -> usize {
        (u * self.shape.d2 + v) * self.shape.channels + c
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize, c: usize) -> f64 {
        self.data[self.index(u, v, c)]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, c: usize, value: f64) {
        let i = self.index(u, v, c);
        self.data[i] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Same values viewed under a new shape of equal size.
    pub fn reshape(self, shape: Shape) -> Result<Self, NnError> {
        Self::from_vec(shape, self.data)
    }

    pub fn flatten(self) -> Self {
        let n = self.data.len();
        Self {
            shape: Shape::vector(n),
            data: self.data,
        }
    }
}

/// `y += a * x`, elementwise.
#[inline]
pub(crate) fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Dot product with four interleaved partial sums; the summation order is
/// fixed so results are reproducible.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
