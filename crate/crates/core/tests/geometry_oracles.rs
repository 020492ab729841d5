//! Geometry operations checked against independent brute-force oracles.

use blameless_core::geometry::{
    boundary_max_distance, boundary_min_distance, convex_hull, delaunay_triangulate,
    halfspaces_to_vertices, intersect, vertices_to_halfspaces, Point2, Polytope2,
};
use blameless_core::testkit::{
    self, delaunay_empty_circle_violation, is_extreme_point_bruteforce, winding_number_contains,
};
use proptest::prelude::*;
use rand::Rng;

fn pt(x: f64, y: f64) -> Point2 {
    Point2::new(x, y)
}

#[test]
fn hull_matches_extreme_point_oracle_on_disk_clouds() {
    let mut rng = testkit::rng(100);
    // One 100-point cloud plus a battery of smaller ones.
    for case in 0..20 {
        let count = if case == 0 { 100 } else { 30 };
        let points: Vec<Point2> = (0..count)
            .map(|_| {
                let r = rng.random_range(0.0..1.0_f64).sqrt();
                let t = rng.random_range(0.0..std::f64::consts::TAU);
                pt(r * t.cos(), r * t.sin())
            })
            .collect();
        let hull = convex_hull(&points).unwrap();
        for (i, p) in points.iter().enumerate() {
            let on_hull = hull.iter().any(|h| (h - p).norm() < 1e-12);
            let extreme = is_extreme_point_bruteforce(&points, i);
            assert_eq!(on_hull, extreme, "point {p:?}");
        }
    }
}

#[test]
fn delaunay_empty_circumcircle_small_battery() {
    let mut rng = testkit::rng(200);
    for case in 0..40 {
        let points: Vec<Point2> = (0..10)
            .map(|_| pt(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
            .collect();
        let Ok(triangles) = delaunay_triangulate(&points) else {
            continue; // degenerate draw
        };
        let index_triples: Vec<[usize; 3]> = triangles.iter().map(|t| t.indices).collect();
        assert!(
            delaunay_empty_circle_violation(&points, &index_triples, 1e-9).is_none(),
            "case {case}"
        );
    }
}

#[test]
fn delaunay_triangle_count_formula() {
    let mut rng = testkit::rng(300);
    for _ in 0..20 {
        let points: Vec<Point2> = (0..12)
            .map(|_| pt(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
            .collect();
        let Ok(triangles) = delaunay_triangulate(&points) else {
            continue;
        };
        let hull = convex_hull(&points).unwrap();
        // 2n − h − 2 when no four points are cocircular (generic draws).
        assert_eq!(triangles.len(), 2 * points.len() - hull.len() - 2);
    }
}

#[test]
fn boundary_distances_match_sampling_oracle() {
    let mut rng = testkit::rng(400);
    for case in 0..10 {
        let family = testkit::random_nested_polygon_family(&mut rng, 2);
        let inner = family.level(1);
        let outer = family.level(2);
        let dmin = boundary_min_distance(inner, outer).unwrap();
        let dmax = boundary_max_distance(inner, outer);
        let (smin, smax) = testkit::boundary_distance_sampling_oracle(inner, outer);
        assert!((dmin - smin).abs() < 1e-3, "case {case}: {dmin} vs {smin}");
        assert!((dmax - smax).abs() < 1e-3, "case {case}: {dmax} vs {smax}");
        assert!(dmin <= dmax);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_reproduces_vertices(seed in 0u64..10_000) {
        let mut rng = testkit::rng(seed);
        let poly = testkit::random_convex_polygon(&mut rng, 8, 2.0, Point2::new(0.0, 0.0));
        let facets = vertices_to_halfspaces(poly.vertices()).unwrap();
        let back = halfspaces_to_vertices(&facets).unwrap();
        prop_assert_eq!(back.len(), poly.vertices().len());
        for v in poly.vertices() {
            prop_assert!(back.iter().any(|w| (v - w).norm() < 1e-9));
        }
    }

    #[test]
    fn contains_agrees_with_winding_oracle(seed in 0u64..10_000) {
        let mut rng = testkit::rng(seed);
        let poly = testkit::random_convex_polygon(&mut rng, 7, 2.0, Point2::new(0.0, 0.0));
        for _ in 0..50 {
            let p = pt(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            // Skip the sliver where tolerance semantics legitimately differ.
            if poly.max_violation(p).abs() < 1e-9 {
                continue;
            }
            prop_assert_eq!(
                poly.contains(p, 0.0),
                winding_number_contains(poly.vertices(), p)
            );
        }
    }

    #[test]
    fn intersection_is_commutative(seed in 0u64..10_000) {
        let mut rng = testkit::rng(seed);
        let a = testkit::random_convex_polygon(&mut rng, 6, 2.0, Point2::new(-0.4, 0.0));
        let b = testkit::random_convex_polygon(&mut rng, 6, 2.0, Point2::new(0.4, 0.2));
        let ab = intersect(&a, &b);
        let ba = intersect(&b, &a);
        match (ab, ba) {
            (Ok(x), Ok(y)) => {
                prop_assert!((x.area() - y.area()).abs() < 1e-9);
                prop_assert_eq!(x.vertices().len(), y.vertices().len());
                for v in x.vertices() {
                    prop_assert!(y.vertices().iter().any(|w| (v - w).norm() < 1e-7));
                }
            }
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "asymmetric outcomes {x:?} vs {y:?}"),
        }
    }

    #[test]
    fn hull_idempotent_on_polytopes(seed in 0u64..10_000) {
        let mut rng = testkit::rng(seed);
        let poly = testkit::random_convex_polygon(&mut rng, 9, 2.0, Point2::new(0.0, 0.0));
        let again = Polytope2::from_points(poly.vertices()).unwrap();
        prop_assert_eq!(again.vertices().len(), poly.vertices().len());
    }
}
