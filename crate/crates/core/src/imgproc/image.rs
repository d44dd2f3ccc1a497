use super::ImgError;

/// 8-bit single-channel raster stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImgError> {
        if width == 0 || height == 0 {
            return Err(ImgError::EmptyImage { width, height });
        }
        if pixels.len() != width * height {
            return Err(ImgError::BufferLength {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImgError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn<F>(width: usize, height: usize, mut f: F) -> Result<Self, ImgError>
    where
        F: FnMut(usize, usize) -> u8,
    {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    /// Copies the `w`×`h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self, ImgError> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(ImgError::InvalidParameter(format!(
                "crop {}x{}+{}+{} exceeds {}x{} image",
                w, h, x0, y0, self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            let row = y * self.width;
            pixels.extend_from_slice(&self.pixels[row + x0..row + x0 + w]);
        }
        Self::new(w, h, pixels)
    }
}

/// Square correlation kernel with an odd side length.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    coefficients: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, coefficients: Vec<f64>) -> Result<Self, ImgError> {
        if size == 0 || size % 2 == 0 {
            return Err(ImgError::InvalidParameter(format!(
                "kernel size must be odd and >= 1, got {size}"
            )));
        }
        if coefficients.len() != size * size {
            return Err(ImgError::BufferLength {
                expected: size * size,
                actual: coefficients.len(),
            });
        }
        Ok(Self { size, coefficients })
    }

    /// The 3×3 sharpening kernel: 9 at the center, −1 on the eight neighbours.
    pub fn sharpen() -> Self {
        Self {
            size: 3,
            coefficients: vec![-1.0, -1.0, -1.0, -1.0, 9.0, -1.0, -1.0, -1.0, -1.0],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Coefficient at row `ky`, column `kx`.
    #[inline]
    pub fn at(&self, kx: usize, ky: usize) -> f64 {
        self.coefficients[ky * self.size + kx]
    }
}

/// Rounds half away from zero and clamps to the 8-bit range.
#[inline]
pub fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Maps a possibly out-of-range index into `0..n` by mirroring about the
/// edge pixels without repeating them (`-1 -> 1`, `n -> n - 2`).
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    let period = 2 * (n - 1);
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_buffers() {
        assert!(matches!(
            GrayImage::new(2, 2, vec![0; 3]),
            Err(ImgError::BufferLength { expected: 4, actual: 3 })
        ));
        assert!(matches!(
            GrayImage::new(0, 2, vec![]),
            Err(ImgError::EmptyImage { .. })
        ));
    }

    #[test]
    fn reflect_without_repeating_edge() {
        let got: Vec<usize> = (-4..8).map(|i| reflect_index(i, 4)).collect();
        assert_eq!(got, vec![2, 3, 2, 1, 0, 1, 2, 3, 2, 1, 0, 1]);
        assert_eq!(reflect_index(-3, 1), 0);
        assert_eq!(reflect_index(-1, 2), 1);
        assert_eq!(reflect_index(2, 2), 0);
    }

    #[test]
    fn even_kernel_rejected() {
        assert!(Kernel::new(2, vec![0.0; 4]).is_err());
        assert!(Kernel::new(3, vec![0.0; 8]).is_err());
    }

    #[test]
    fn quantize_rounds_half_away_from_zero() {
        assert_eq!(quantize(127.5), 128);
        assert_eq!(quantize(127.49), 127);
        assert_eq!(quantize(-3.0), 0);
        assert_eq!(quantize(300.0), 255);
    }

    #[test]
    fn crop_copies_window() {
        let img = GrayImage::from_fn(4, 3, |x, y| (y * 4 + x) as u8).unwrap();
        let c = img.crop(1, 1, 2, 2).unwrap();
        assert_eq!(c.pixels(), &[5, 6, 9, 10]);
        assert!(img.crop(3, 0, 2, 1).is_err());
    }
}
