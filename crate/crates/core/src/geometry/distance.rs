//! Exact boundary-to-boundary distances between convex polygons.

use super::{GeometryError, Point2, Polytope2, EPS_GEOM};

/// Euclidean distance from `p` to the closed segment `a..b`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 <= 1e-30 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Exact minimum distance between the boundaries of a nested pair.
///
/// For disjoint convex closed curves the minimum is attained at a
/// vertex-segment pair, so enumerating all (vertex, edge) pairs in both
/// directions is exact.
pub fn boundary_min_distance(inner: &Polytope2, outer: &Polytope2) -> Result<f64, GeometryError> {
    for v in inner.vertices() {
        if !outer.contains(*v, EPS_GEOM) {
            return Err(GeometryError::NotNested);
        }
    }
    let mut best = f64::INFINITY;
    for v in inner.vertices() {
        for (a, b) in outer.edges() {
            best = best.min(point_segment_distance(*v, a, b));
        }
    }
    for v in outer.vertices() {
        for (a, b) in inner.edges() {
            best = best.min(point_segment_distance(*v, a, b));
        }
    }
    Ok(best)
}

/// Exact maximum distance between boundary points of two polygons.
///
/// The maximum of a convex function over a polytope is attained at a vertex,
/// so the vertex-pair maximum is exact.
pub fn boundary_max_distance(p: &Polytope2, q: &Polytope2) -> f64 {
    let mut best = 0.0_f64;
    for v in p.vertices() {
        for w in q.vertices() {
            best = best.max((v - w).norm());
        }
    }
    best
}
