//! Landmark handling, convex hulls, polygon masks and masked face extraction.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::imgproc::GrayImage;

pub const LANDMARK_COUNT: usize = 68;

/// Distance-like tolerance used for real-valued boundary tests.
const REAL_EPS: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("landmarks lie entirely outside the {width}x{height} image")]
    OutOfFrame { width: usize, height: usize },
    #[error("expected {LANDMARK_COUNT} landmarks, got {0}")]
    LandmarkCount(usize),
    #[error("non-finite landmark coordinate at point {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Twice the signed area of triangle `o, a, b`; positive for a
/// counter-clockwise turn.
#[inline]
pub fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Named facial regions, 1-based inclusive ranges in the 68-point scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Jaw,
    LeftBrow,
    RightBrow,
    Nose,
    LeftEye,
    RightEye,
    OuterLip,
    InnerLip,
}

impl Region {
    pub const ALL: [Region; 8] = [
        Region::Jaw,
        Region::LeftBrow,
        Region::RightBrow,
        Region::Nose,
        Region::LeftEye,
        Region::RightEye,
        Region::OuterLip,
        Region::InnerLip,
    ];

    /// First and last landmark number (1-based, inclusive).
    pub const fn span(self) -> (usize, usize) {
        match self {
            Region::Jaw => (1, 17),
            Region::LeftBrow => (18, 22),
            Region::RightBrow => (23, 27),
            Region::Nose => (28, 36),
            Region::LeftEye => (37, 42),
            Region::RightEye => (43, 48),
            Region::OuterLip => (49, 60),
            Region::InnerLip => (61, 68),
        }
    }

    fn indices(self) -> Range<usize> {
        let (a, b) = self.span();
        a - 1..b
    }
}

/// The 68 landmark points of one face.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    points: Vec<Point>,
}

impl LandmarkSet {
    pub fn new(points: Vec<Point>) -> Result<Self, GeometryError> {
        if points.len() != LANDMARK_COUNT {
            return Err(GeometryError::LandmarkCount(points.len()));
        }
        if let Some(i) = points.iter().position(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(GeometryError::NonFinite(i + 1));
        }
        Ok(Self { points })
    }

    pub fn from_pairs(pairs: &[[f64; 2]]) -> Result<Self, GeometryError> {
        Self::new(pairs.iter().map(|p| Point::new(p[0], p[1])).collect())
    }

    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| [p.x, p.y]).collect()
    }

    /// Landmark by its 1-based number.
    pub fn point(&self, number: usize) -> Point {
        assert!((1..=LANDMARK_COUNT).contains(&number), "landmark number {number} out of 1..=68");
        self.points[number - 1]
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn region(&self, region: Region) -> &[Point] {
        &self.points[region.indices()]
    }

    /// Points 1–27: jaw line plus both brows, the outline used for masking.
    pub fn face_outline(&self) -> &[Point] {
        &self.points[0..27]
    }
}

/// Convex hull by monotone chain.
///
/// Returns the hull vertices counter-clockwise (positive signed area),
/// starting at the lexicographically smallest point, with collinear vertices
/// removed.
pub fn convex_hull(pts: &[Point]) -> Result<Vec<Point>, GeometryError> {
    if pts.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(GeometryError::Degenerate("non-finite point".into()));
    }
    let mut sorted: Vec<Point> = pts.to_vec();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    sorted.dedup();
    if sorted.len() < 3 {
        return Err(GeometryError::Degenerate(format!(
            "need at least 3 distinct points, got {}",
            sorted.len()
        )));
    }
    let integral = sorted.iter().all(|p| p.x.fract() == 0.0 && p.y.fract() == 0.0);
    let tol = if integral { 0.0 } else { REAL_EPS };

    let mut hull: Vec<Point> = Vec::with_capacity(2 * sorted.len());
    for &p in &sorted {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= tol {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in sorted.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= tol {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 {
        return Err(GeometryError::Degenerate("all points are collinear".into()));
    }
    Ok(hull)
}

/// Twice the signed polygon area (shoelace).
pub fn signed_area2(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            a.x * b.y - b.x * a.y
        })
        .sum()
}

/// Row-major pixel mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Scanline fill of a convex polygon. A pixel is set when its center (the
/// integer coordinate itself) lies inside the polygon or on its boundary.
pub fn fill_polygon(poly: &[Point], width: usize, height: usize) -> Result<Mask, GeometryError> {
    if poly.len() < 3 {
        return Err(GeometryError::Degenerate(format!(
            "polygon needs at least 3 vertices, got {}",
            poly.len()
        )));
    }
    if signed_area2(poly).abs() <= REAL_EPS {
        return Err(GeometryError::Degenerate("polygon has zero area".into()));
    }
    let mut mask = Mask::new(width, height);
    let ymin = poly.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let ymax = poly.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    let row_lo = (ymin - REAL_EPS).ceil().max(0.0);
    let row_hi = (ymax + REAL_EPS).floor().min(height as f64 - 1.0);
    if row_lo > row_hi {
        return Ok(mask);
    }
    let n = poly.len();
    for row in row_lo as usize..=row_hi as usize {
        let y = row as f64;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            let (ey0, ey1) = if a.y <= b.y { (a.y, b.y) } else { (b.y, a.y) };
            if y < ey0 - REAL_EPS || y > ey1 + REAL_EPS {
                continue;
            }
            if (b.y - a.y).abs() <= REAL_EPS {
                lo = lo.min(a.x.min(b.x));
                hi = hi.max(a.x.max(b.x));
            } else {
                let t = ((y - a.y) / (b.y - a.y)).clamp(0.0, 1.0);
                let x = a.x + t * (b.x - a.x);
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        if lo > hi {
            continue;
        }
        let col_lo = (lo - REAL_EPS).ceil().max(0.0);
        let col_hi = (hi + REAL_EPS).floor().min(width as f64 - 1.0);
        if col_lo > col_hi {
            continue;
        }
        for col in col_lo as usize..=col_hi as usize {
            mask.set(col, row, true);
        }
    }
    Ok(mask)
}

/// Masks the face outline (landmarks 1–27) and crops to its bounding box.
///
/// Landmarks are clamped to the image before the hull is taken; pixels
/// outside the hull become 0.
pub fn extract_face(img: &GrayImage, lm: &LandmarkSet) -> Result<GrayImage, GeometryError> {
    let (w, h) = img.dims();
    let (maxx, maxy) = ((w - 1) as f64, (h - 1) as f64);
    let outline = lm.face_outline();
    let bx0 = outline.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let bx1 = outline.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    let by0 = outline.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let by1 = outline.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    if bx1 < 0.0 || by1 < 0.0 || bx0 > maxx || by0 > maxy {
        return Err(GeometryError::OutOfFrame { width: w, height: h });
    }
    let clamped: Vec<Point> = outline
        .iter()
        .map(|p| Point::new(p.x.clamp(0.0, maxx), p.y.clamp(0.0, maxy)))
        .collect();
    let hull = convex_hull(&clamped)?;
    let mask = fill_polygon(&hull, w, h)?;

    let x0 = hull.iter().map(|p| p.x).fold(f64::INFINITY, f64::min).floor() as usize;
    let x1 = hull.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max).ceil() as usize;
    let y0 = hull.iter().map(|p| p.y).fold(f64::INFINITY, f64::min).floor() as usize;
    let y1 = hull.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max).ceil() as usize;
    let (cw, ch) = (x1 - x0 + 1, y1 - y0 + 1);
    let out = GrayImage::from_fn(cw, ch, |x, y| {
        let (sx, sy) = (x + x0, y + y0);
        if mask.get(sx, sy) {
            img.get(sx, sy)
        } else {
            0
        }
    })
    .expect("crop lies inside the source image");
    Ok(out)
}
