//! Bowyer-Watson Delaunay triangulation with deterministic cocircular
//! tie-breaking.
//!
//! The bootstrap triangle's vertices are symbolic points at infinity in three
//! fixed directions, with the corresponding limit forms of the orientation
//! and incircle predicates. A finite "super-triangle" misclassifies sliver
//! triangles whose circumcircles reach its corners; the limit predicates have
//! no such failure mode, and the real triangles of the augmented
//! triangulation are exactly the Delaunay triangulation of the input.

use super::{cross, GeometryError, Point2, EPS_AREA, EPS_CIRC};
use std::collections::BTreeMap;

/// Triangle of a triangulation: vertex indices into the triangulated point
/// list (CCW, lowest index first) plus the cached circumcircle.
#[derive(Debug, Clone)]
pub struct Triangle {
    pub indices: [usize; 3],
    pub circumcenter: Point2,
    pub circumradius: f64,
}

impl Triangle {
    pub fn vertices(&self, points: &[Point2]) -> [Point2; 3] {
        [
            points[self.indices[0]],
            points[self.indices[1]],
            points[self.indices[2]],
        ]
    }

    pub fn centroid(&self, points: &[Point2]) -> Point2 {
        let [a, b, c] = self.vertices(points);
        (a + b + c) / 3.0
    }

    pub fn area(&self, points: &[Point2]) -> f64 {
        let [a, b, c] = self.vertices(points);
        0.5 * cross(a, b, c).abs()
    }
}

/// Circumcircle of a triangle; `None` when the points are (near-)collinear.
fn circumcircle(a: Point2, b: Point2, c: Point2) -> Option<(Point2, f64)> {
    let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    if d.abs() < 1e-14 * (1.0 + a.norm() + b.norm() + c.norm()) {
        return None;
    }
    let a2 = a.norm_squared();
    let b2 = b.norm_squared();
    let c2 = c.norm_squared();
    let ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
    let uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
    let center = Point2::new(ux, uy);
    Some((center, (a - center).norm()))
}

/// Strict incircle predicate for finite points: `p` strictly inside the
/// circumcircle of the CCW triangle `(a, b, c)`. The determinant form stays
/// well-conditioned for slivers whose circumcenter/radius cancel.
fn in_circle_finite(a: Point2, b: Point2, c: Point2, p: Point2) -> bool {
    let (ax, ay) = (a.x - p.x, a.y - p.y);
    let (bx, by) = (b.x - p.x, b.y - p.y);
    let (cx, cy) = (c.x - p.x, c.y - p.y);
    let det = (ax * ax + ay * ay) * (bx * cy - cx * by) - (bx * bx + by * by) * (ax * cy - cx * ay)
        + (cx * cx + cy * cy) * (ax * by - bx * ay);
    let m = ax
        .abs()
        .max(ay.abs())
        .max(bx.abs())
        .max(by.abs())
        .max(cx.abs())
        .max(cy.abs());
    // Degree-4 homogeneous determinant: relative threshold, ties -> outside.
    det > 1e-11 * m.powi(4)
}

/// The three far-field directions of the bootstrap triangle (CCW order).
const FAR_DIRS: [(f64, f64); 3] = [
    (-0.8660254037844387, -0.5),
    (0.8660254037844387, -0.5),
    (0.0, 1.0),
];

struct Mesh {
    /// Real input points; indices `n..n+3` refer to the far-field vertices.
    points: Vec<Point2>,
}

impl Mesh {
    fn n(&self) -> usize {
        self.points.len()
    }

    fn dir(&self, idx: usize) -> Point2 {
        let (x, y) = FAR_DIRS[idx - self.n()];
        Point2::new(x, y)
    }

    /// Orientation sign of the (possibly partly infinite) triple, taking the
    /// leading term of the limit expansion.
    fn orient(&self, u: usize, v: usize, w: usize) -> f64 {
        let n = self.n();
        let fin: Vec<usize> = [u, v, w].iter().copied().filter(|&i| i < n).collect();
        match fin.len() {
            3 => cross(self.points[u], self.points[v], self.points[w]),
            2 => {
                // One infinite vertex: rotate so the order is (a, b, inf).
                let (a, b, d) = if u >= n {
                    (v, w, self.dir(u))
                } else if v >= n {
                    (w, u, self.dir(v))
                } else {
                    (u, v, self.dir(w))
                };
                let (pa, pb) = (self.points[a], self.points[b]);
                let lead = (pb - pa).x * d.y - (pb - pa).y * d.x;
                if lead.abs() > 1e-12 * (pb - pa).norm() {
                    lead
                } else {
                    // Edge parallel to the direction: next expansion term.
                    cross(pa, pb, Point2::zeros())
                }
            }
            1 => {
                // Two infinite vertices dominate: sign of d_i × d_j with the
                // cyclic order preserved.
                let (di, dj) = if u < n {
                    (self.dir(v), self.dir(w))
                } else if v < n {
                    (self.dir(w), self.dir(u))
                } else {
                    (self.dir(u), self.dir(v))
                };
                di.x * dj.y - di.y * dj.x
            }
            _ => 1.0, // the all-infinite bootstrap triangle is CCW
        }
    }

    /// Limit incircle predicate: is the finite point `p` strictly inside the
    /// circumdisk of triangle `t`?
    fn is_bad(&self, t: &[usize; 3], p: Point2) -> bool {
        let n = self.n();
        let fin: Vec<usize> = t.iter().copied().filter(|&i| i < n).collect();
        match fin.len() {
            3 => in_circle_finite(self.points[t[0]], self.points[t[1]], self.points[t[2]], p),
            2 => {
                // Disk -> halfplane bounded by the finite edge, on the side
                // of the receding vertex.
                let inf = *t.iter().find(|&&i| i >= n).unwrap();
                let (a, b) = (self.points[fin[0]], self.points[fin[1]]);
                let d = self.dir(inf);
                let edge = b - a;
                let far_side = {
                    let lead = edge.x * d.y - edge.y * d.x;
                    if lead.abs() > 1e-12 * edge.norm() {
                        lead
                    } else {
                        cross(a, b, Point2::zeros())
                    }
                };
                let side = cross(a, b, p);
                let tol = 1e-12 * edge.norm() * ((p - a).norm() + 1.0);
                side * far_side.signum() > tol
            }
            1 => {
                // Disk -> halfplane through the finite vertex `a` with outward
                // direction γ solving dᵢ·γ = ½, dⱼ·γ = ½ (unit directions).
                let a = self.points[fin[0]];
                let infs: Vec<Point2> = t
                    .iter()
                    .filter(|&&i| i >= n)
                    .map(|&i| self.dir(i))
                    .collect();
                let (di, dj) = (infs[0], infs[1]);
                let det = di.x * dj.y - di.y * dj.x;
                let g = Point2::new(0.5 * (dj.y - di.y) / det, 0.5 * (di.x - dj.x) / det);
                (p - a).dot(&g) > 1e-12 * ((p - a).norm() + 1.0)
            }
            _ => true, // every finite point is inside the bootstrap triangle
        }
    }
}

/// Delaunay triangulation of the convex hull of `points`.
///
/// Every returned triangle's open circumcircle is empty up to [`EPS_CIRC`];
/// cocircular quadrilaterals are resolved deterministically by preferring the
/// diagonal incident to the lowest original point index. Output is sorted by
/// vertex indices so it is reproducible regardless of internal ordering.
pub fn delaunay_triangulate(points: &[Point2]) -> Result<Vec<Triangle>, GeometryError> {
    let n = points.len();
    if n < 3 {
        return Err(GeometryError::DegenerateInput("fewer than 3 points"));
    }
    for p in points {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return Err(GeometryError::DegenerateInput("non-finite point"));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (points[i] - points[j]).norm() <= 1e-12 {
                return Err(GeometryError::DegenerateInput("duplicate points"));
            }
        }
    }
    let anchor = points[0];
    let far = points
        .iter()
        .copied()
        .max_by(|a, b| {
            (a - anchor)
                .norm()
                .partial_cmp(&(b - anchor).norm())
                .unwrap()
        })
        .unwrap();
    let span = (far - anchor).norm();
    if points
        .iter()
        .all(|p| cross(anchor, far, *p).abs() <= 1e-12 * span * (p - anchor).norm().max(1.0))
    {
        return Err(GeometryError::DegenerateInput("all points collinear"));
    }

    let mesh = Mesh {
        points: points.to_vec(),
    };
    let make_tri = |a: usize, b: usize, c: usize| -> [usize; 3] {
        if mesh.orient(a, b, c) < 0.0 {
            [b, a, c]
        } else {
            [a, b, c]
        }
    };

    let mut tris: Vec<[usize; 3]> = vec![[n, n + 1, n + 2]];
    for (i, &p) in points.iter().enumerate() {
        let bad: Vec<usize> = (0..tris.len())
            .filter(|&t| mesh.is_bad(&tris[t], p))
            .collect();
        // Cavity boundary: edges of bad triangles not shared by two of them.
        let mut edge_count: BTreeMap<(usize, usize), (usize, usize, usize)> = BTreeMap::new();
        for &t in &bad {
            let v = tris[t];
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                edge_count
                    .entry(key)
                    .and_modify(|e| e.2 += 1)
                    .or_insert((a, b, 1));
            }
        }
        let mut keep: Vec<[usize; 3]> = Vec::with_capacity(tris.len() + 4);
        for (t, tri) in tris.iter().enumerate() {
            if !bad.contains(&t) {
                keep.push(*tri);
            }
        }
        for (_, (a, b, count)) in edge_count {
            if count == 1 {
                keep.push(make_tri(a, b, i));
            }
        }
        tris = keep;
    }

    tris.retain(|t| t.iter().all(|&v| v < n));
    normalize_cocircular(&mut tris, points);

    let mut out: Vec<Triangle> = Vec::with_capacity(tris.len());
    for t in &tris {
        let (a, b, c) = (points[t[0]], points[t[1]], points[t[2]]);
        let Some((center, radius)) = circumcircle(a, b, c) else {
            return Err(GeometryError::DegenerateInput("degenerate triangle"));
        };
        let mut idx = *t;
        // Rotate so the lowest index leads, preserving CCW order.
        let lead = (0..3).min_by_key(|&k| idx[k]).unwrap();
        idx.rotate_left(lead);
        if 0.5 * cross(points[idx[0]], points[idx[1]], points[idx[2]]).abs() <= EPS_AREA {
            return Err(GeometryError::DegenerateInput("degenerate triangle"));
        }
        out.push(Triangle {
            indices: idx,
            circumcenter: center,
            circumradius: radius,
        });
    }
    out.sort_by_key(|t| {
        let mut s = t.indices;
        s.sort_unstable();
        s
    });
    Ok(out)
}

/// Flips cocircular quadrilaterals to the diagonal incident to the lowest
/// point index. Each flip strictly lowers that index, so the pass terminates.
fn normalize_cocircular(tris: &mut [[usize; 3]], points: &[Point2]) {
    loop {
        let mut adjacency: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (t, tri) in tris.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                adjacency.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        let mut flip: Option<(usize, usize, usize, usize, usize, usize)> = None;
        'scan: for ((u, v), owners) in &adjacency {
            if owners.len() != 2 {
                continue;
            }
            let (t1, t2) = (owners[0], owners[1]);
            let a = opposite_vertex(&tris[t1], *u, *v);
            let b = opposite_vertex(&tris[t2], *u, *v);
            if u.min(v) <= &a.min(b) {
                continue;
            }
            let Some((center, radius)) = circumcircle(
                points[tris[t1][0]],
                points[tris[t1][1]],
                points[tris[t1][2]],
            ) else {
                continue;
            };
            let on_circle =
                ((points[b] - center).norm() - radius).abs() <= EPS_CIRC * (1.0 + radius);
            if !on_circle {
                continue;
            }
            // Only flip strictly convex quadrilaterals (diagonals must cross).
            if !segments_cross(points[a], points[b], points[*u], points[*v]) {
                continue;
            }
            flip = Some((t1, t2, *u, *v, a, b));
            break 'scan;
        }
        match flip {
            None => return,
            Some((t1, t2, u, v, a, b)) => {
                tris[t1] = ccw(a, b, u, points);
                tris[t2] = ccw(a, b, v, points);
            }
        }
    }
}

fn ccw(a: usize, b: usize, c: usize, points: &[Point2]) -> [usize; 3] {
    if cross(points[a], points[b], points[c]) < 0.0 {
        [b, a, c]
    } else {
        [a, b, c]
    }
}

fn opposite_vertex(t: &[usize; 3], u: usize, v: usize) -> usize {
    *t.iter().find(|&&x| x != u && x != v).unwrap()
}

fn segments_cross(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = cross(a, b, c);
    let d2 = cross(a, b, d);
    let d3 = cross(c, d, a);
    let d4 = cross(c, d, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn three_points_one_triangle() {
        let tris = delaunay_triangulate(&[pt(0.0, 0.0), pt(1.0, 0.0), pt(0.0, 1.0)]).unwrap();
        assert_eq!(tris.len(), 1);
        assert_eq!(tris[0].indices[0], 0);
    }

    #[test]
    fn cocircular_square_prefers_lowest_index_diagonal() {
        let tris = delaunay_triangulate(&[pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0), pt(0.0, 1.0)])
            .unwrap();
        assert_eq!(tris.len(), 2);
        // Both triangles must contain the diagonal 0-2.
        for t in &tris {
            assert!(
                t.indices.contains(&0) && t.indices.contains(&2),
                "{:?}",
                t.indices
            );
        }
    }

    #[test]
    fn triangulation_covers_hull_area() {
        let points = vec![
            pt(-2.0, -2.0),
            pt(2.0, -2.0),
            pt(2.0, 2.0),
            pt(-2.0, 2.0),
            pt(-1.0, -1.0),
            pt(1.0, -1.0),
            pt(1.0, 1.0),
            pt(-1.0, 1.0),
        ];
        let tris = delaunay_triangulate(&points).unwrap();
        let total: f64 = tris.iter().map(|t| t.area(&points)).sum();
        assert!((total - 16.0).abs() < 1e-9, "covered {total}");
        assert_eq!(tris.len(), 10); // 2n - h - 2 = 16 - 4 - 2
    }

    #[test]
    fn duplicate_points_rejected() {
        let err = delaunay_triangulate(&[pt(0.0, 0.0), pt(0.0, 0.0), pt(1.0, 0.0)]).unwrap_err();
        assert!(matches!(err, GeometryError::DegenerateInput(_)));
    }

    #[test]
    fn collinear_points_rejected() {
        let err = delaunay_triangulate(&[pt(0.0, 0.0), pt(1.0, 0.0), pt(2.0, 0.0)]).unwrap_err();
        assert!(matches!(err, GeometryError::DegenerateInput(_)));
    }
}
