//! Convex hull (Andrew's monotone chain) with collinear-run merging.

use super::{cross, GeometryError, Point2, EPS_GEOM};

/// CCW-ordered extreme points of `points`.
///
/// Collinear triples are merged so the output has one vertex per true corner;
/// this guarantees one halfspace per edge downstream. Fails on fewer than 3
/// distinct points or an all-collinear input.
pub fn convex_hull(points: &[Point2]) -> Result<Vec<Point2>, GeometryError> {
    let mut pts: Vec<Point2> = points
        .iter()
        .copied()
        .filter(|p| p.x.is_finite() && p.y.is_finite())
        .collect();
    if pts.len() != points.len() {
        return Err(GeometryError::DegenerateInput("non-finite point"));
    }
    pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    pts.dedup_by(|a, b| (*a - *b).norm() <= 1e-12);
    if pts.len() < 3 {
        return Err(GeometryError::DegenerateInput(
            "fewer than 3 distinct points",
        ));
    }

    let turns_right = |a: Point2, b: Point2, c: Point2| {
        // Relative test: treat angles below ~EPS_GEOM radians as collinear.
        cross(a, b, c) <= EPS_GEOM * (b - a).norm() * (c - b).norm()
    };

    let mut lower: Vec<Point2> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && turns_right(lower[lower.len() - 2], lower[lower.len() - 1], p) {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turns_right(upper[upper.len() - 2], upper[upper.len() - 1], p) {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return Err(GeometryError::DegenerateInput("all points collinear"));
    }
    Ok(lower)
}
