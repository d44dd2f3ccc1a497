mod common;

use common::*;
use ferkit::geometry::*;
use ferkit::imgproc::GrayImage;
use proptest::prelude::*;
use rand::Rng;

fn p(x: f64, y: f64) -> Point {
    Point { x, y }
}

fn sorted(mut v: Vec<Point>) -> Vec<Point> {
    v.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    v
}

fn random_points(r: &mut impl Rng, n: usize, integral: bool) -> Vec<Point> {
    (0..n)
        .map(|_| {
            if integral {
                p(r.random_range(0..=100) as f64, r.random_range(0..=100) as f64)
            } else {
                p(r.random_range(0.0..100.0), r.random_range(0.0..100.0))
            }
        })
        .collect()
}

#[test]
fn triangle_and_square() {
    let tri = vec![p(0.0, 0.0), p(4.0, 0.0), p(0.0, 4.0)];
    assert_eq!(convex_hull(&tri).unwrap(), tri);
    let sq = vec![p(0.0, 0.0), p(4.0, 0.0), p(4.0, 4.0), p(0.0, 4.0), p(2.0, 2.0), p(2.0, 0.0)];
    assert_eq!(convex_hull(&sq).unwrap(), vec![p(0.0, 0.0), p(4.0, 0.0), p(4.0, 4.0), p(0.0, 4.0)]);
}

#[test]
fn degenerate_hulls() {
    assert!(matches!(convex_hull(&[p(0.0, 0.0), p(1.0, 1.0)]), Err(GeometryError::Degenerate(_))));
    let line: Vec<Point> = (0..10).map(|i| p(i as f64, 2.0 * i as f64)).collect();
    assert!(matches!(convex_hull(&line), Err(GeometryError::Degenerate(_))));
}

#[test]
fn hull_matches_cubic_oracle() {
    let mut r = rng(11);
    for k in 0..300 {
        let pts = random_points(&mut r, 27, k % 2 == 0);
        let hull = convex_hull(&pts).unwrap();
        assert!(signed_area2(&hull) > 0.0);
        assert_eq!(hull[0], sorted(pts.clone())[0]);
        assert_eq!(sorted(hull), hull_oracle(&pts));
    }
}

#[test]
fn fill_square_inclusive() {
    let m = fill_polygon(&[p(0.0, 0.0), p(2.0, 0.0), p(2.0, 2.0), p(0.0, 2.0)], 4, 4).unwrap();
    for y in 0..4 {
        for x in 0..4 {
            assert_eq!(m.get(x, y), x <= 2 && y <= 2);
        }
    }
    assert_eq!(m.count(), 9);
}

#[test]
fn fill_covering_raster() {
    let m = fill_polygon(&[p(-5.0, -5.0), p(50.0, -5.0), p(50.0, 50.0), p(-5.0, 50.0)], 7, 6).unwrap();
    assert_eq!(m.count(), 42);
}

#[test]
fn fill_triangle_matches_oracle() {
    let tri = [p(0.0, 0.0), p(6.0, 0.0), p(0.0, 6.0)];
    let m = fill_polygon(&tri, 8, 8).unwrap();
    for y in 0..8 {
        for x in 0..8 {
            assert_eq!(m.get(x, y), inside_convex(&tri, p(x as f64, y as f64), 0.0), "({x},{y})");
        }
    }
    assert_eq!(m.count(), 28);
}

#[test]
fn fill_hulls_match_oracle_exhaustively() {
    let mut r = rng(12);
    for _ in 0..200 {
        let pts: Vec<Point> = (0..12)
            .map(|_| p(r.random_range(-5..70) as f64, r.random_range(-5..70) as f64))
            .collect();
        let Ok(hull) = convex_hull(&pts) else { continue };
        let m = fill_polygon(&hull, 64, 64).unwrap();
        for y in 0..64 {
            for x in 0..64 {
                assert_eq!(m.get(x, y), inside_convex(&hull, p(x as f64, y as f64), 0.0));
            }
        }
    }
}

fn square_landmarks(x0: f64, y0: f64, x1: f64, y1: f64) -> LandmarkSet {
    // points 1-27 trace the square; the remaining 41 sit inside it
    let mut pts = Vec::new();
    let corners = [p(x0, y0), p(x1, y0), p(x1, y1), p(x0, y1)];
    for i in 0..27 {
        pts.push(corners[i % 4]);
    }
    for i in 0..41 {
        pts.push(p(x0 + 1.0 + (i % 5) as f64, y0 + 1.0 + (i / 5) as f64));
    }
    LandmarkSet::new(pts).unwrap()
}

#[test]
fn extract_full_frame() {
    let mut r = rng(4);
    let img = random_image(&mut r, 30, 20);
    let face = extract_face(&img, &square_landmarks(0.0, 0.0, 29.0, 19.0)).unwrap();
    assert_eq!(face, img);
}

#[test]
fn extract_square_dims() {
    let img = GrayImage::filled(100, 100, 200).unwrap();
    let face = extract_face(&img, &square_landmarks(10.0, 10.0, 50.0, 70.0)).unwrap();
    assert_eq!(face.dims(), (41, 61));
    assert!(face.pixels().iter().all(|&v| v == 200));
}

#[test]
fn extract_masks_outside_hull() {
    let img = GrayImage::filled(40, 40, 255).unwrap();
    let mut pts = vec![p(5.0, 5.0), p(35.0, 5.0), p(20.0, 35.0)];
    while pts.len() < 68 {
        pts.push(p(20.0, 15.0));
    }
    let face = extract_face(&img, &LandmarkSet::new(pts).unwrap()).unwrap();
    assert_eq!(face.dims(), (31, 31));
    assert_eq!(face.get(0, 30), 0);
    assert_eq!(face.get(15, 30), 255);
    assert_eq!(face.get(0, 0), 255);
}

#[test]
fn extract_collinear_and_out_of_frame() {
    let img = GrayImage::filled(10, 10, 1).unwrap();
    let line: Vec<Point> = (0..68).map(|i| p(i as f64 * 0.1, i as f64 * 0.1)).collect();
    assert!(matches!(
        extract_face(&img, &LandmarkSet::new(line).unwrap()),
        Err(GeometryError::Degenerate(_))
    ));
    let far: Vec<Point> = (0..68).map(|i| p(500.0 + (i % 7) as f64, 500.0 + (i / 7) as f64)).collect();
    assert!(matches!(
        extract_face(&img, &LandmarkSet::new(far).unwrap()),
        Err(GeometryError::OutOfFrame { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hull_idempotent_and_permutation_invariant(
        pts in proptest::collection::vec((0i32..50, 0i32..50), 3..30),
        seed in any::<u64>(),
    ) {
        let pts: Vec<Point> = pts.into_iter().map(|(x, y)| p(x as f64, y as f64)).collect();
        if let Ok(h) = convex_hull(&pts) {
            prop_assert_eq!(convex_hull(&h).unwrap(), h.clone());
            let mut shuffled = pts.clone();
            use rand::seq::SliceRandom;
            shuffled.shuffle(&mut rng(seed));
            prop_assert_eq!(convex_hull(&shuffled).unwrap(), h.clone());
            for q in &pts {
                prop_assert!(inside_convex(&h, *q, 0.0));
            }
        }
    }

    #[test]
    fn extract_never_invents_values(seed in any::<u64>()) {
        let mut r = rng(seed);
        let img = random_image(&mut r, 40, 36);
        let pts: Vec<Point> = (0..68).map(|_| p(r.random_range(-3.0..43.0), r.random_range(-3.0..39.0))).collect();
        let lm = LandmarkSet::new(pts).unwrap();
        if let Ok(face) = extract_face(&img, &lm) {
            let outline = lm.face_outline();
            let x0 = outline.iter().map(|q| q.x).fold(f64::INFINITY, f64::min).max(0.0).floor() as usize;
            let y0 = outline.iter().map(|q| q.y).fold(f64::INFINITY, f64::min).max(0.0).floor() as usize;
            for y in 0..face.height() {
                for x in 0..face.width() {
                    let v = face.get(x, y);
                    prop_assert!(v == 0 || v == img.get(x + x0, y + y0));
                }
            }
        }
    }
}
