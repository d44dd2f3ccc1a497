use super::image::{quantize, reflect_index, GrayImage, Kernel};
use super::ImgError;

/// Global histogram equalization over the 256-bin histogram.
///
/// A constant image has no spread to redistribute and is returned as is.
pub fn histogram_equalize(img: &GrayImage) -> GrayImage {
    let mut hist = [0usize; 256];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    let mut cdf = [0usize; 256];
    let mut acc = 0usize;
    for (c, h) in cdf.iter_mut().zip(hist.iter()) {
        acc += h;
        *c = acc;
    }
    let total = img.pixels().len();
    let cdf_min = cdf.iter().copied().find(|&c| c > 0).unwrap_or(0);
    if total == cdf_min {
        return img.clone();
    }
    let denom = (total - cdf_min) as f64;
    let mut lut = [0u8; 256];
    for (v, out) in lut.iter_mut().enumerate() {
        let c = cdf[v].saturating_sub(cdf_min) as f64;
        *out = quantize(c / denom * 255.0);
    }
    let pixels = img.pixels().iter().map(|&p| lut[p as usize]).collect();
    GrayImage::new(img.width(), img.height(), pixels).expect("dimensions unchanged")
}

/// Edge-preserving smoothing over a `d`×`d` window with Gaussian spatial and
/// range weights. Borders are mirrored.
pub fn bilateral_filter(
    img: &GrayImage,
    d: usize,
    sigma_color: f64,
    sigma_space: f64,
) -> Result<GrayImage, ImgError> {
    if d == 0 || d % 2 == 0 {
        return Err(ImgError::InvalidParameter(format!(
            "bilateral window diameter must be odd and >= 1, got {d}"
        )));
    }
    if !(sigma_color > 0.0 && sigma_color.is_finite()) || !(sigma_space > 0.0 && sigma_space.is_finite()) {
        return Err(ImgError::InvalidParameter(format!(
            "bilateral sigmas must be positive and finite, got color={sigma_color} space={sigma_space}"
        )));
    }
    let r = (d / 2) as isize;
    let (w, h) = img.dims();

    let space_denom = 2.0 * sigma_space * sigma_space;
    let mut space_w = Vec::with_capacity(d * d);
    for dy in -r..=r {
        for dx in -r..=r {
            let dist2 = (dx * dx + dy * dy) as f64;
            space_w.push((-dist2 / space_denom).exp());
        }
    }
    let color_denom = 2.0 * sigma_color * sigma_color;
    let mut color_w = [0.0f64; 256];
    for (diff, cw) in color_w.iter_mut().enumerate() {
        let diff = diff as f64;
        *cw = (-(diff * diff) / color_denom).exp();
    }

    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let center = img.get(x, y) as i32;
            let mut num = 0.0;
            let mut den = 0.0;
            let mut k = 0;
            for dy in -r..=r {
                let sy = reflect_index(y as isize + dy, h);
                for dx in -r..=r {
                    let sx = reflect_index(x as isize + dx, w);
                    let q = img.get(sx, sy) as i32;
                    let wt = space_w[k] * color_w[(q - center).unsigned_abs() as usize];
                    num += wt * q as f64;
                    den += wt;
                    k += 1;
                }
            }
            out.push(quantize(num / den));
        }
    }
    GrayImage::new(w, h, out)
}

/// Unclamped correlation of `img` with `k` at every pixel, mirrored borders.
pub fn correlate_f64(img: &GrayImage, k: &Kernel) -> Result<Vec<f64>, ImgError> {
    let (w, h) = img.dims();
    if k.size() > w.min(h) {
        return Err(ImgError::InvalidParameter(format!(
            "kernel size {} exceeds image {}x{}",
            k.size(),
            w,
            h
        )));
    }
    let r = (k.size() / 2) as isize;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for ky in 0..k.size() {
                let sy = reflect_index(y as isize + ky as isize - r, h);
                for kx in 0..k.size() {
                    let sx = reflect_index(x as isize + kx as isize - r, w);
                    acc += k.at(kx, ky) * img.get(sx, sy) as f64;
                }
            }
            out.push(acc);
        }
    }
    Ok(out)
}

/// 2D filtering (correlation, kernel not flipped) with mirrored borders,
/// rounded and clamped to 8 bits.
pub fn convolve2d(img: &GrayImage, k: &Kernel) -> Result<GrayImage, ImgError> {
    let raw = correlate_f64(img, k)?;
    GrayImage::new(img.width(), img.height(), raw.into_iter().map(quantize).collect())
}

pub fn sharpen(img: &GrayImage) -> Result<GrayImage, ImgError> {
    convolve2d(img, &Kernel::sharpen())
}

/// Bilinear resampling with pixel-center alignment.
pub fn resize_bilinear(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage, ImgError> {
    if out_w == 0 || out_h == 0 {
        return Err(ImgError::InvalidParameter(format!(
            "target size must be non-zero, got {out_w}x{out_h}"
        )));
    }
    let (w, h) = img.dims();
    if (w, h) == (out_w, out_h) {
        return Ok(img.clone());
    }
    let sx_scale = w as f64 / out_w as f64;
    let sy_scale = h as f64 / out_h as f64;
    let axis = |dst: usize, scale: f64, n: usize| -> (usize, usize, f64) {
        let s = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = s.floor() as usize;
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, s - i0 as f64)
    };
    let cols: Vec<_> = (0..out_w).map(|x| axis(x, sx_scale, w)).collect();
    let mut out = Vec::with_capacity(out_w * out_h);
    for y in 0..out_h {
        let (y0, y1, fy) = axis(y, sy_scale, h);
        for &(x0, x1, fx) in &cols {
            let top = img.get(x0, y0) as f64 * (1.0 - fx) + img.get(x1, y0) as f64 * fx;
            let bot = img.get(x0, y1) as f64 * (1.0 - fx) + img.get(x1, y1) as f64 * fx;
            out.push(quantize(top * (1.0 - fy) + bot * fy));
        }
    }
    GrayImage::new(out_w, out_h, out)
}

/// Expands a cropped face into its five training variants:
///
/// 1. histogram-equalized face
/// 2. bilateral filter (d=9, σc=75, σs=75)
/// 3. sharpened variant 2
/// 4. histogram-equalized variant 3
/// 5. bilateral filter (d=9, σc=100, σs=100) of the face
///
/// The fifth variant filters the original crop rather than variant 4.
/// Faces smaller than 3×3 are rejected because the sharpening kernel does
/// not fit.
pub fn make_variants(face: &GrayImage) -> Result<[GrayImage; 5], ImgError> {
    let v1 = histogram_equalize(face);
    let v2 = bilateral_filter(face, 9, 75.0, 75.0)?;
    let v3 = sharpen(&v2)?;
    let v4 = histogram_equalize(&v3);
    let v5 = bilateral_filter(face, 9, 100.0, 100.0)?;
    Ok([v1, v2, v3, v4, v5])
}
