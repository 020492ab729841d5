//! Conversions between the vertex and halfspace representations.

use super::{convex_hull, GeometryError, Halfspace, Point2, EPS_GEOM};
use nalgebra::{Matrix2, Vector2};

/// One unit-normal halfspace per edge of a CCW vertex list.
pub fn vertices_to_halfspaces(vertices: &[Point2]) -> Result<Vec<Halfspace>, GeometryError> {
    if vertices.len() < 3 {
        return Err(GeometryError::DegenerateInput("fewer than 3 vertices"));
    }
    let n = vertices.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let edge = b - a;
        if edge.norm() <= 1e-12 {
            return Err(GeometryError::DegenerateInput("zero-length edge"));
        }
        // Outward normal of a CCW polygon: rotate the edge by -90 degrees.
        let normal = Vector2::new(edge.y, -edge.x);
        out.push(Halfspace::new(normal, normal.dot(&a))?);
    }
    Ok(out)
}

/// CCW vertex list of the bounded full-dimensional region `⋂ {n·x <= b}`.
///
/// Every pairwise facet intersection is kept iff it satisfies all remaining
/// halfspaces within [`EPS_GEOM`]. Returns [`GeometryError::Unbounded`] when
/// the normals leave an open recession direction and [`GeometryError::Empty`]
/// when no full-dimensional feasible region remains.
pub fn halfspaces_to_vertices(halfspaces: &[Halfspace]) -> Result<Vec<Point2>, GeometryError> {
    if halfspaces.len() < 3 {
        return Err(check_unbounded(halfspaces).unwrap_or(GeometryError::Empty));
    }
    if let Some(err) = check_unbounded(halfspaces) {
        return Err(err);
    }

    let m = halfspaces.len();
    let mut candidates: Vec<Point2> = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            let hi = halfspaces[i];
            let hj = halfspaces[j];
            let a = Matrix2::new(hi.normal.x, hi.normal.y, hj.normal.x, hj.normal.y);
            let det = a.determinant();
            if det.abs() < 1e-12 {
                continue;
            }
            let p = a
                .lu()
                .solve(&Vector2::new(hi.offset, hj.offset))
                .expect("2x2 solve with nonzero determinant");
            if halfspaces.iter().all(|hs| hs.satisfies(p, EPS_GEOM)) {
                candidates.push(p);
            }
        }
    }

    // Merge numerically coincident intersection points.
    let mut merged: Vec<Point2> = Vec::new();
    for p in candidates {
        let tol = 1e-7 * (1.0 + p.norm());
        if !merged.iter().any(|q| (p - *q).norm() <= tol) {
            merged.push(p);
        }
    }
    if merged.len() < 3 {
        return Err(GeometryError::Empty);
    }

    // Candidates are in convex position; the hull call orders them CCW and
    // merges any collinear leftovers from weakly redundant constraints.
    match convex_hull(&merged) {
        Ok(verts) => Ok(verts),
        Err(_) => Err(GeometryError::Empty),
    }
}

/// `Some(Unbounded)` when some direction escapes every halfspace: the region
/// is bounded iff consecutive normal angles never gap by pi or more.
fn check_unbounded(halfspaces: &[Halfspace]) -> Option<GeometryError> {
    if halfspaces.is_empty() {
        return Some(GeometryError::Unbounded);
    }
    let mut angles: Vec<f64> = halfspaces
        .iter()
        .map(|hs| hs.normal.y.atan2(hs.normal.x))
        .collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = angles.len();
    for i in 0..n {
        let next = if i + 1 < n {
            angles[i + 1]
        } else {
            angles[0] + std::f64::consts::TAU
        };
        if next - angles[i] >= std::f64::consts::PI - 1e-12 {
            return Some(GeometryError::Unbounded);
        }
    }
    None
}
