//! Procedural stand-in corpus: face-like images with 68-point landmark
//! fixtures, one expression geometry per class.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::manifest::{write_manifest, ManifestEntry};
use super::{DataError, Emotion};
use crate::geometry::{LandmarkSet, Point};
use crate::imgproc::{quantize, save_pgm, GrayImage};
use crate::seed::indexed_seed;

pub const SYNTH_WIDTH: usize = 96;
pub const SYNTH_HEIGHT: usize = 120;
pub const MANIFEST_NAME: &str = "manifest.jsonl";

/// Expression geometry in face-local units (one unit is one pixel at scale 1).
#[derive(Debug, Clone, Copy)]
struct Expression {
    /// Upward brow shift.
    brow_raise: f64,
    /// Inner-brow drop; negative raises the inner ends.
    brow_tilt: f64,
    eye_open: f64,
    mouth_half_width: f64,
    /// Positive bends the mouth into a smile, negative into a frown.
    mouth_curve: f64,
    mouth_open: f64,
}

fn base_expression(e: Emotion) -> Expression {
    let x = |brow_raise, brow_tilt, eye_open, mouth_half_width, mouth_curve, mouth_open| Expression {
        brow_raise,
        brow_tilt,
        eye_open,
        mouth_half_width,
        mouth_curve,
        mouth_open,
    };
    match e {
        Emotion::Angry => x(-2.0, 7.0, 2.0, 10.0, -1.0, 0.0),
        Emotion::Disgust => x(-1.0, 3.0, 1.4, 12.0, -6.0, 4.0),
        Emotion::Fear => x(5.0, -5.0, 5.0, 15.0, -1.0, 4.0),
        Emotion::Happy => x(0.0, 0.0, 3.0, 15.0, 8.0, 1.0),
        Emotion::Sad => x(1.0, -7.0, 2.5, 11.0, -7.0, 0.0),
        Emotion::Surprise => x(9.0, 0.0, 5.5, 8.0, 0.0, 13.0),
        Emotion::Neutral => x(0.0, 0.0, 3.0, 12.0, 0.0, 0.0),
    }
}

fn jitter<R: Rng>(e: Expression, rng: &mut R) -> Expression {
    let mut n = |sd: f64| Normal::new(0.0, sd).expect("positive sd").sample(rng);
    Expression {
        brow_raise: e.brow_raise + n(0.8),
        brow_tilt: e.brow_tilt + n(0.8),
        eye_open: (e.eye_open + n(0.35)).max(0.8),
        mouth_half_width: e.mouth_half_width + n(0.8),
        mouth_curve: e.mouth_curve + n(0.8),
        mouth_open: (e.mouth_open + n(0.6)).max(0.0),
    }
}

struct Mouth {
    center_y: f64,
    half_width: f64,
    curve: f64,
    open: f64,
}

impl Mouth {
    fn mid(&self, t: f64) -> f64 {
        self.center_y - self.curve / 2.0 + self.curve * (1.0 - t * t)
    }

    fn at(&self, t: f64, offset: f64) -> Point {
        Point::new(self.half_width * t, self.mid(t) + offset * (1.0 - t * t))
    }

    fn outer_upper(&self, t: f64) -> Point {
        self.at(t, -(self.open / 2.0 + 3.0))
    }

    fn outer_lower(&self, t: f64) -> Point {
        self.at(t, self.open / 2.0 + 3.0)
    }

    fn inner_upper(&self, t: f64) -> Point {
        self.at(t, -self.open / 2.0)
    }

    fn inner_lower(&self, t: f64) -> Point {
        self.at(t, self.open / 2.0)
    }
}

const EYE_Y: f64 = -12.0;
const BROW_Y: f64 = -24.0;

fn brow_y(e: &Expression, along: f64) -> f64 {
    // along = 0 at the inner end, 1 at the outer end
    BROW_Y - e.brow_raise + e.brow_tilt * (1.0 - along) - 0.3 * e.brow_tilt * along
}

/// The 68 landmarks in face-local coordinates.
fn local_landmarks(e: &Expression) -> Vec<Point> {
    let mut p = Vec::with_capacity(68);
    // 1-17 jaw
    for i in 0..17 {
        let th = std::f64::consts::PI * i as f64 / 16.0;
        p.push(Point::new(-36.0 * th.cos(), -8.0 + 50.0 * th.sin()));
    }
    // 18-22 left brow (outer to inner), 23-27 right brow (inner to outer)
    for i in 0..5 {
        let along = 1.0 - i as f64 / 4.0;
        p.push(Point::new(-(6.0 + 22.0 * along), brow_y(e, along)));
    }
    for i in 0..5 {
        let along = i as f64 / 4.0;
        p.push(Point::new(6.0 + 22.0 * along, brow_y(e, along)));
    }
    // 28-36 nose
    for y in [-14.0, -9.0, -4.0, 1.0] {
        p.push(Point::new(0.0, y));
    }
    for (x, y) in [(-7.0, 5.0), (-3.5, 6.5), (0.0, 7.0), (3.5, 6.5), (7.0, 5.0)] {
        p.push(Point::new(x, y));
    }
    // 37-42 left eye, 43-48 right eye
    let eo = e.eye_open;
    for (x, dy) in [(-23.0, 0.0), (-18.5, -eo), (-13.5, -eo), (-9.0, 0.0), (-13.5, eo), (-18.5, eo)] {
        p.push(Point::new(x, EYE_Y + dy));
    }
    for (x, dy) in [(9.0, 0.0), (13.5, -eo), (18.5, -eo), (23.0, 0.0), (18.5, eo), (13.5, eo)] {
        p.push(Point::new(x, EYE_Y + dy));
    }
    let m = mouth(e);
    // 49-60 outer lip
    p.push(m.outer_upper(-1.0));
    for t in [-2.0 / 3.0, -1.0 / 3.0, 0.0, 1.0 / 3.0, 2.0 / 3.0] {
        p.push(m.outer_upper(t));
    }
    p.push(m.outer_upper(1.0));
    for t in [2.0 / 3.0, 1.0 / 3.0, 0.0, -1.0 / 3.0, -2.0 / 3.0] {
        p.push(m.outer_lower(t));
    }
    // 61-68 inner lip
    p.push(m.inner_upper(-0.8));
    for t in [-0.4, 0.0, 0.4] {
        p.push(m.inner_upper(t));
    }
    p.push(m.inner_upper(0.8));
    for t in [0.4, 0.0, -0.4] {
        p.push(m.inner_lower(t));
    }
    p
}

fn mouth(e: &Expression) -> Mouth {
    Mouth {
        center_y: 22.0,
        half_width: e.mouth_half_width,
        curve: e.mouth_curve,
        open: e.mouth_open,
    }
}

fn seg_dist2(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.x + t * dx - p.x, a.y + t * dy - p.y);
    qx * qx + qy * qy
}

fn near_polyline(p: Point, line: &[Point], half_width: f64) -> bool {
    let hw2 = half_width * half_width;
    line.windows(2).any(|w| seg_dist2(p, w[0], w[1]) <= hw2)
}

fn sample_curve(f: impl Fn(f64) -> Point) -> Vec<Point> {
    (0..=24).map(|i| f(-1.0 + 2.0 * i as f64 / 24.0)).collect()
}

fn render<R: Rng>(e: &Expression, cx: f64, cy: f64, scale: f64, rng: &mut R) -> GrayImage {
    let background = rng.random_range(50.0..100.0);
    let skin = rng.random_range(150.0..200.0);
    let ink = rng.random_range(20.0..60.0);
    let noise = Normal::new(0.0, 5.0).expect("positive sd");

    let brow_l: Vec<Point> = (0..=8)
        .map(|i| {
            let along = 1.0 - i as f64 / 8.0;
            Point::new(-(6.0 + 22.0 * along), brow_y(e, along))
        })
        .collect();
    let brow_r: Vec<Point> = brow_l.iter().map(|p| Point::new(-p.x, p.y)).collect();
    let m = mouth(e);
    let upper = sample_curve(|t| m.outer_upper(t));
    let lower = sample_curve(|t| m.outer_lower(t));
    let nose = [Point::new(0.0, -14.0), Point::new(0.0, 1.0), Point::new(-6.0, 5.0)];

    let mut pixels = Vec::with_capacity(SYNTH_WIDTH * SYNTH_HEIGHT);
    for y in 0..SYNTH_HEIGHT {
        for x in 0..SYNTH_WIDTH {
            let p = Point::new((x as f64 - cx) / scale, (y as f64 - cy) / scale);
            let in_face = (p.x / 38.0).powi(2) + ((p.y + 4.0) / 54.0).powi(2) <= 1.0;
            let mut v = if in_face { skin } else { background };
            if in_face {
                let in_eye = |ex: f64| ((p.x - ex) / 7.0).powi(2) + ((p.y - EYE_Y) / e.eye_open).powi(2) <= 1.0;
                let t = p.x / m.half_width;
                let in_mouth_gap = t.abs() < 1.0
                    && m.open > 0.5
                    && p.y >= m.inner_upper(t).y
                    && p.y <= m.inner_lower(t).y;
                if near_polyline(p, &nose, 0.8) {
                    v = skin - 45.0;
                }
                if near_polyline(p, &brow_l, 2.0) || near_polyline(p, &brow_r, 2.0) {
                    v = ink;
                }
                if in_eye(-16.0) || in_eye(16.0) {
                    v = ink;
                }
                if in_mouth_gap {
                    v = ink * 0.4;
                } else if near_polyline(p, &upper, 1.4) || near_polyline(p, &lower, 1.4) {
                    v = ink + 30.0;
                }
            }
            pixels.push(quantize(v + noise.sample(rng)));
        }
    }
    GrayImage::new(SYNTH_WIDTH, SYNTH_HEIGHT, pixels).expect("fixed dimensions")
}

/// One synthetic face and its landmarks.
pub fn synthesize_face(label: Emotion, seed: u64) -> (GrayImage, LandmarkSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = jitter(base_expression(label), &mut rng);
    let cx = SYNTH_WIDTH as f64 / 2.0 + rng.random_range(-4.0..4.0);
    let cy = SYNTH_HEIGHT as f64 / 2.0 + 2.0 + rng.random_range(-4.0..4.0);
    let scale = rng.random_range(0.92..1.08);
    let img = render(&e, cx, cy, scale, &mut rng);
    let pts = local_landmarks(&e)
        .into_iter()
        .map(|p| {
            let r = |v: f64| (v * 100.0).round() / 100.0;
            Point::new(r(cx + scale * p.x), r(cy + scale * p.y))
        })
        .collect();
    (img, LandmarkSet::new(pts).expect("68 finite points"))
}

/// Writes `7 · per_class` PGM images plus `manifest.jsonl` into `out_dir`.
/// Labels are interleaved (0..6, 0..6, ...). Output is a pure function of
/// `seed`.
pub fn generate_synthetic(out_dir: &Path, per_class: usize, seed: u64) -> Result<Vec<ManifestEntry>, DataError> {
    if per_class == 0 {
        return Err(DataError::InvalidParameter("per_class must be at least 1".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| DataError::Io {
        path: out_dir.to_path_buf(),
        source: e,
    })?;
    let mut entries = Vec::with_capacity(per_class * 7);
    for _ in 0..per_class {
        for label in Emotion::ALL {
            let idx = entries.len();
            let (img, lm) = synthesize_face(label, indexed_seed(seed, "synthetic", idx as u64));
            let path = out_dir.join(format!("s{idx:05}_{}.pgm", label.index()));
            save_pgm(&img, &path).map_err(|e| DataError::Image {
                path: path.clone(),
                message: e.to_string(),
            })?;
            entries.push(ManifestEntry {
                line: idx + 1,
                path,
                label,
                landmarks: Some(lm),
            });
        }
    }
    write_manifest(&out_dir.join(MANIFEST_NAME), &entries)?;
    Ok(entries)
}
