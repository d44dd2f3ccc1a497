//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use ferkit::geometry::Point;
use ferkit::imgproc::GrayImage;
use ferkit::nn::{ConvParams, DenseParams, Pool2, Shape, Tensor3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut impl Rng, w: usize, h: usize) -> GrayImage {
    GrayImage::from_fn(w, h, |_, _| rng.random::<u8>()).unwrap()
}

pub fn random_tensor(rng: &mut impl Rng, shape: Shape) -> Tensor3 {
    Tensor3::from_vec(shape, (0..shape.len()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn round_half_away(v: f64) -> f64 {
    let t = v.trunc();
    if (v - t).abs() >= 0.5 {
        t + v.signum()
    } else {
        t
    }
}

pub fn to_u8(v: f64) -> u8 {
    round_half_away(v).max(0.0).min(255.0) as u8
}

/// Mirror without repeating the edge sample.
pub fn mirror(mut i: i64, n: usize) -> usize {
    let n = n as i64;
    if n == 1 {
        return 0;
    }
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * (n - 1) - i;
        } else {
            return i as usize;
        }
    }
}

pub fn equalize_oracle(img: &GrayImage) -> GrayImage {
    let px = img.pixels();
    let n = px.len();
    let cdf = |v: u8| px.iter().filter(|&&p| p <= v).count();
    let cdf_min = (0..=255u8).map(cdf).find(|&c| c > 0).unwrap();
    if cdf_min == n {
        return img.clone();
    }
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let v = img.get(x, y);
        to_u8((cdf(v) - cdf_min) as f64 / (n - cdf_min) as f64 * 255.0)
    })
    .unwrap()
}

pub fn bilateral_oracle(img: &GrayImage, d: usize, sc: f64, ss: f64) -> GrayImage {
    let r = (d / 2) as i64;
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let ip = img.get(x, y) as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for dy in -r..=r {
            for dx in -r..=r {
                let q = img.get(mirror(x as i64 + dx, img.width()), mirror(y as i64 + dy, img.height())) as f64;
                let ws = (-((dx * dx + dy * dy) as f64) / (2.0 * ss * ss)).exp();
                let wc = (-((ip - q) * (ip - q)) / (2.0 * sc * sc)).exp();
                num += ws * wc * q;
                den += ws * wc;
            }
        }
        to_u8(num / den)
    })
    .unwrap()
}

/// Unclamped kernel-weighted sum at every pixel, kernel rows over y.
pub fn correlate_oracle(img: &GrayImage, k: &[f64], size: usize) -> Vec<f64> {
    let r = (size / 2) as i64;
    let mut out = Vec::new();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let mut acc = 0.0;
            for ky in 0..size as i64 {
                for kx in 0..size as i64 {
                    let sx = mirror(x as i64 + kx - r, img.width());
                    let sy = mirror(y as i64 + ky - r, img.height());
                    acc += k[(ky * size as i64 + kx) as usize] * img.get(sx, sy) as f64;
                }
            }
            out.push(acc);
        }
    }
    out
}

pub const SHARPEN: [f64; 9] = [-1.0, -1.0, -1.0, -1.0, 9.0, -1.0, -1.0, -1.0, -1.0];

pub fn sharpen_oracle(img: &GrayImage) -> GrayImage {
    let v = correlate_oracle(img, &SHARPEN, 3);
    GrayImage::new(img.width(), img.height(), v.into_iter().map(to_u8).collect()).unwrap()
}

pub fn bilinear_oracle(img: &GrayImage, ow: usize, oh: usize) -> GrayImage {
    let (w, h) = img.dims();
    let src = |d: usize, n: usize, on: usize| {
        let s = (d as f64 + 0.5) * (n as f64 / on as f64) - 0.5;
        s.max(0.0).min((n - 1) as f64)
    };
    GrayImage::from_fn(ow, oh, |x, y| {
        let sx = src(x, w, ow);
        let sy = src(y, h, oh);
        let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
        let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
        let p = |xx: usize, yy: usize| img.get(xx, yy) as f64;
        let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
        let bot = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
        to_u8(top * (1.0 - fy) + bot * fy)
    })
    .unwrap()
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Hull vertices from every directed pair that keeps all points on its left
/// (or on the segment itself). Exact for integer coordinates.
pub fn hull_oracle(pts: &[Point]) -> Vec<Point> {
    let mut uniq: Vec<Point> = Vec::new();
    for p in pts {
        if !uniq.contains(p) {
            uniq.push(*p);
        }
    }
    let mut verts: Vec<Point> = Vec::new();
    for &a in &uniq {
        for &b in &uniq {
            if a == b {
                continue;
            }
            let edge = uniq.iter().all(|&c| {
                let z = cross(a, b, c);
                if z != 0.0 {
                    return z > 0.0;
                }
                // collinear: must lie within the segment
                let t = (c.x - a.x) * (b.x - a.x) + (c.y - a.y) * (b.y - a.y);
                let len2 = (b.x - a.x).powi(2) + (b.y - a.y).powi(2);
                (0.0..=len2).contains(&t)
            });
            if edge {
                for v in [a, b] {
                    if !verts.contains(&v) {
                        verts.push(v);
                    }
                }
            }
        }
    }
    verts.sort_by(|p, q| p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)));
    verts
}

/// Inside-or-on test for a counter-clockwise convex polygon.
pub fn inside_convex(poly: &[Point], p: Point, tol: f64) -> bool {
    (0..poly.len()).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let len = ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt();
        cross(a, b, p) / len >= -tol
    })
}

pub fn conv_oracle(x: &Tensor3, p: &ConvParams) -> Tensor3 {
    let s = x.shape();
    let out = Shape::new(s.d1 - p.kh + 1, s.d2 - p.kw + 1, p.out_ch);
    let mut y = Tensor3::zeros(out);
    for u in 0..out.d1 {
        for v in 0..out.d2 {
            for o in 0..p.out_ch {
                let mut acc = p.bias[o];
                for i in 0..p.kh {
                    for j in 0..p.kw {
                        for c in 0..p.in_ch {
                            acc += x.get(u + i, v + j, c) * p.weights[((i * p.kw + j) * p.in_ch + c) * p.out_ch + o];
                        }
                    }
                }
                y.set(u, v, o, acc);
            }
        }
    }
    y
}

pub fn dense_oracle(x: &[f64], p: &DenseParams) -> Vec<f64> {
    (0..p.outputs)
        .map(|o| p.bias[o] + (0..p.inputs).map(|i| x[i] * p.weights[i * p.outputs + o]).sum::<f64>())
        .collect()
}

pub fn pool_oracle(x: &Tensor3, p: &Pool2, max: bool) -> Tensor3 {
    let s = x.shape();
    let out = Shape::new((s.d1 - p.pool.0) / p.stride.0 + 1, (s.d2 - p.pool.1) / p.stride.1 + 1, s.channels);
    let mut y = Tensor3::zeros(out);
    for u in 0..out.d1 {
        for v in 0..out.d2 {
            for c in 0..s.channels {
                let vals: Vec<f64> = (0..p.pool.0)
                    .flat_map(|i| (0..p.pool.1).map(move |j| (i, j)))
                    .map(|(i, j)| x.get(u * p.stride.0 + i, v * p.stride.1 + j, c))
                    .collect();
                let r = if max {
                    vals.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                } else {
                    vals.iter().sum::<f64>() / vals.len() as f64
                };
                y.set(u, v, c, r);
            }
        }
    }
    y
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn mann_whitney(scores: &[f64], truths: &[usize], class: usize) -> f64 {
    let pos: Vec<f64> = scores.iter().zip(truths).filter(|(_, &t)| t == class).map(|(s, _)| *s).collect();
    let neg: Vec<f64> = scores.iter().zip(truths).filter(|(_, &t)| t != class).map(|(s, _)| *s).collect();
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

/// Central-difference derivative of `f` with respect to `xs[i]`.
pub fn numeric_grad(xs: &mut [f64], i: usize, eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = xs[i];
    xs[i] = orig + eps;
    let plus = f(xs);
    xs[i] = orig - eps;
    let minus = f(xs);
    xs[i] = orig;
    (plus - minus) / (2.0 * eps)
}

pub fn rel_err(a: f64, n: f64) -> f64 {
    let m = a.abs().max(n.abs());
    if m < 1e-10 {
        0.0
    } else {
        (a - n).abs() / m
    }
}
