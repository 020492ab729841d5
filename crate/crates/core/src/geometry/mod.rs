//! 2D convex polytopes held simultaneously in vertex and halfspace form,
//! with conversions, containment, intersection, nesting validation, boundary
//! distances, and Delaunay triangulation.
//!
//! Conventions:
//! - vertices are counter-clockwise with collinear runs merged, so every
//!   halfspace is tight at exactly one edge;
//! - halfspace normals are unit length, so the distance from a point to a
//!   facet plane is `|n·x - b|` with no renormalization.

mod convert;
mod delaunay;
mod distance;
mod hull;
mod nested;

pub use convert::{halfspaces_to_vertices, vertices_to_halfspaces};
pub use delaunay::{delaunay_triangulate, Triangle};
pub use distance::{boundary_max_distance, boundary_min_distance, point_segment_distance};
pub use hull::convex_hull;
pub use nested::NestedFamily;

use nalgebra::Vector2;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Point in the plane.
pub type Point2 = Vector2<f64>;

/// Tolerance for geometric predicates (meters at problem scale).
pub const EPS_GEOM: f64 = 1e-9;
/// Minimum boundary separation between consecutive nested sets.
pub const EPS_SEP: f64 = 1e-6;
/// Area below which a polygon or triangle is treated as degenerate.
pub const EPS_AREA: f64 = 1e-12;
/// Cocircularity tolerance for Delaunay predicates.
pub const EPS_CIRC: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("halfspace region is unbounded")]
    Unbounded,
    #[error("polytope is empty or has no interior")]
    Empty,
    #[error("inner polytope is not contained in the outer polytope")]
    NotNested,
    #[error("boundary separation {gap:.3e} is below the minimum {min:.3e}")]
    BoundaryOverlap { gap: f64, min: f64 },
}

/// Closed halfspace `normal · x <= offset` with `‖normal‖ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Halfspace {
    pub normal: Vector2<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vector2<f64>, offset: f64) -> Result<Self, GeometryError> {
        let norm = normal.norm();
        if !norm.is_finite() || norm < EPS_AREA {
            return Err(GeometryError::DegenerateInput("zero-length normal"));
        }
        Ok(Self {
            normal: normal / norm,
            offset: offset / norm,
        })
    }

    /// Signed distance from `p` to the facet plane; positive outside.
    #[inline]
    pub fn violation(&self, p: Point2) -> f64 {
        self.normal.dot(&p) - self.offset
    }

    #[inline]
    pub fn satisfies(&self, p: Point2, tol: f64) -> bool {
        self.violation(p) <= tol
    }
}

/// Bounded full-dimensional convex polytope in both representations.
///
/// Invariants established at construction:
/// - at least 3 vertices, strictly positive area;
/// - vertices are CCW-ordered extreme points (collinear runs merged);
/// - every vertex satisfies every halfspace within [`EPS_GEOM`];
/// - one halfspace per edge, tight at that edge's two vertices.
#[derive(Debug, Clone)]
pub struct Polytope2 {
    vertices: Vec<Point2>,
    halfspaces: Vec<Halfspace>,
}

impl Polytope2 {
    /// Builds the polytope as the convex hull of `points`.
    pub fn from_points(points: &[Point2]) -> Result<Self, GeometryError> {
        let vertices = convex_hull(points)?;
        let halfspaces = vertices_to_halfspaces(&vertices)?;
        let poly = Self {
            vertices,
            halfspaces,
        };
        poly.check_invariants()?;
        Ok(poly)
    }

    /// Builds the polytope from a halfspace description.
    ///
    /// Redundant halfspaces are dropped; fails with [`GeometryError::Unbounded`]
    /// or [`GeometryError::Empty`] when the region is not a bounded
    /// full-dimensional polytope.
    pub fn from_halfspaces(halfspaces: &[Halfspace]) -> Result<Self, GeometryError> {
        let vertices = halfspaces_to_vertices(halfspaces)?;
        // Rebuilding the halfspaces from the surviving vertices removes
        // redundant constraints and re-establishes one facet per edge.
        let halfspaces = vertices_to_halfspaces(&vertices)?;
        let poly = Self {
            vertices,
            halfspaces,
        };
        poly.check_invariants()?;
        Ok(poly)
    }

    /// Axis-aligned box `[lo.x, hi.x] × [lo.y, hi.y]`.
    pub fn axis_aligned_box(lo: Point2, hi: Point2) -> Result<Self, GeometryError> {
        if !(lo.x < hi.x && lo.y < hi.y) {
            return Err(GeometryError::DegenerateInput("empty box"));
        }
        Self::from_points(&[
            Point2::new(lo.x, lo.y),
            Point2::new(hi.x, lo.y),
            Point2::new(hi.x, hi.y),
            Point2::new(lo.x, hi.y),
        ])
    }

    fn check_invariants(&self) -> Result<(), GeometryError> {
        if self.vertices.len() < 3 {
            return Err(GeometryError::DegenerateInput("fewer than 3 vertices"));
        }
        if self.area() <= EPS_AREA {
            return Err(GeometryError::Empty);
        }
        for v in &self.vertices {
            if !(v.x.is_finite() && v.y.is_finite()) {
                return Err(GeometryError::DegenerateInput("non-finite vertex"));
            }
            for hs in &self.halfspaces {
                if !hs.satisfies(*v, EPS_GEOM) {
                    return Err(GeometryError::DegenerateInput(
                        "vertex violates a facet halfspace",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    /// Edges as CCW `(start, end)` vertex pairs.
    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// `true` iff `a_j · p <= b_j + tol` for every facet `j`.
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        self.halfspaces.iter().all(|hs| hs.satisfies(p, tol))
    }

    /// Largest facet violation of `p`; non-positive inside.
    pub fn max_violation(&self, p: Point2) -> f64 {
        self.halfspaces
            .iter()
            .map(|hs| hs.violation(p))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Shoelace area (positive for the CCW vertex order).
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        let mut sum = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            sum += a.x * b.y - b.x * a.y;
        }
        0.5 * sum
    }

    /// Mean of the vertices. Used as the "center" of a safety set.
    pub fn vertex_centroid(&self) -> Point2 {
        let mut c = Point2::zeros();
        for v in &self.vertices {
            c += v;
        }
        c / self.vertices.len() as f64
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        (lo, hi)
    }

    /// Range `[min, max]` of coordinate `axis` (0 = x, 1 = y) over the set.
    pub fn coordinate_interval(&self, axis: usize) -> (f64, f64) {
        let (lo, hi) = self.bounding_box();
        match axis {
            0 => (lo.x, hi.x),
            _ => (lo.y, hi.y),
        }
    }
}

/// Intersection of two polytopes with redundant halfspaces removed.
pub fn intersect(p: &Polytope2, q: &Polytope2) -> Result<Polytope2, GeometryError> {
    let mut halfspaces = p.halfspaces.clone();
    halfspaces.extend_from_slice(&q.halfspaces);
    match Polytope2::from_halfspaces(&halfspaces) {
        Ok(poly) => Ok(poly),
        // A bounded input can only fail by losing full dimensionality.
        Err(GeometryError::Unbounded) | Err(GeometryError::DegenerateInput(_)) => {
            Err(GeometryError::Empty)
        }
        Err(e) => Err(e),
    }
}

impl Serialize for Polytope2 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            vertices: &'a [[f64; 2]],
        }
        let verts: Vec<[f64; 2]> = self.vertices.iter().map(|v| [v.x, v.y]).collect();
        Repr { vertices: &verts }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Polytope2 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            vertices: Vec<[f64; 2]>,
        }
        let repr = Repr::deserialize(deserializer)?;
        let points: Vec<Point2> = repr
            .vertices
            .iter()
            .map(|v| Point2::new(v[0], v[1]))
            .collect();
        Polytope2::from_points(&points).map_err(D::Error::custom)
    }
}

/// Cross product `(b - a) × (c - a)`; positive when `c` lies left of `a→b`.
#[inline]
pub(crate) fn cross(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}
