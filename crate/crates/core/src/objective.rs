//! Synthesis and evaluation of a convex piecewise-affine objective whose
//! sublevel sets equal the nested safety sets.
//!
//! Construction: boundary values are assigned by a distance-ratio recursion;
//! each annulus between consecutive sets is Delaunay-triangulated and one
//! affine piece is fitted per triangle through its three (vertex, value)
//! points. The canonical representation is the max-form
//! `g(x) = max(g0, max_r α_rᵀx + β_r)`, which is convex by construction; the
//! region-wise interpolant is retained for validation, and disagreement
//! between the two is reported as a validation failure rather than assumed
//! away.

use crate::geometry::{
    boundary_max_distance, boundary_min_distance, cross, delaunay_triangulate, GeometryError,
    NestedFamily, Point2, Polytope2, Triangle, EPS_AREA, EPS_GEOM, EPS_SEP,
};
use crate::rng::unit_f64;
use nalgebra::{Matrix3, Vector2, Vector3};

/// Agreement tolerance between assigned boundary values, the max-form, and
/// the interpolant.
pub const EPS_VAL: f64 = 1e-8;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ObjectiveError {
    #[error("boundary separation too small for the value recursion: {0}")]
    BoundaryOverlap(GeometryError),
    #[error("degenerate triangle in annulus {annulus}")]
    DegenerateTriangle { annulus: usize },
    #[error(
        "max-form disagrees with an assigned boundary value by {error:.3e} at vertex {vertex:?}"
    )]
    ValidationFailure { vertex: (f64, f64), error: f64 },
    #[error("point lies outside the outermost safety set")]
    OutsideDomain,
    #[error("family must have at least two sets for the value recursion")]
    TooFewSets,
    #[error("first boundary value must exceed the base value")]
    NonIncreasingValues,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One affine piece `x ↦ alpha·x + beta` fitted over a triangle of an annulus
/// triangulation.
#[derive(Debug, Clone)]
pub struct AffinePiece {
    pub alpha: Vector2<f64>,
    pub beta: f64,
    pub triangle: Triangle,
    /// 0-based annulus index: piece spans the region between family set
    /// `annulus` and `annulus + 1`.
    pub annulus: usize,
}

impl AffinePiece {
    #[inline]
    pub fn value(&self, x: Point2) -> f64 {
        self.alpha.dot(&x) + self.beta
    }
}

/// Triangulated annulus between consecutive sets: the point list is the
/// vertex union of both rings, with the assigned objective value per point.
#[derive(Debug, Clone)]
pub struct AnnulusMesh {
    pub points: Vec<Point2>,
    pub values: Vec<f64>,
}

/// Convex piecewise-affine objective with the nested sets as level sets.
#[derive(Debug, Clone)]
pub struct PiecewiseAffineObjective {
    base: Polytope2,
    base_value: f64,
    pieces: Vec<AffinePiece>,
    level_values: Vec<f64>,
    family: NestedFamily,
    annuli: Vec<AnnulusMesh>,
}

/// Boundary values `[g_0, …, g_{m-1}]` for the family's set boundaries.
///
/// `g_0` is the value on the innermost set, `g_1` the value on the second
/// boundary, and each further level follows the recursion
/// `g_{i+1} = g_i + (d_max(i, i+1) / d_min(i-1, i)) (g_i - g_{i-1})`,
/// which makes the outward secant slope non-decreasing in every direction.
pub fn assign_boundary_values(
    family: &NestedFamily,
    g0: f64,
    g1: f64,
) -> Result<Vec<f64>, ObjectiveError> {
    if family.len() < 2 {
        return Err(ObjectiveError::TooFewSets);
    }
    if g1 <= g0 {
        return Err(ObjectiveError::NonIncreasingValues);
    }
    let mut levels = vec![g0, g1];
    for i in 2..family.len() {
        // Between 1-based boundaries (i-1, i) and (i, i+1).
        let d_min = boundary_min_distance(family.level(i - 1), family.level(i))
            .map_err(ObjectiveError::BoundaryOverlap)?;
        if d_min < EPS_SEP {
            return Err(ObjectiveError::BoundaryOverlap(
                GeometryError::BoundaryOverlap {
                    gap: d_min,
                    min: EPS_SEP,
                },
            ));
        }
        let d_max = boundary_max_distance(family.level(i), family.level(i + 1));
        let g_prev = levels[i - 2];
        let g_cur = levels[i - 1];
        levels.push(g_cur + d_max / d_min * (g_cur - g_prev));
    }
    Ok(levels)
}

/// Builds the objective for `family` with base value `g0` and first boundary
/// value `g1`.
pub fn generate_objective(
    family: &NestedFamily,
    g0: f64,
    g1: f64,
) -> Result<PiecewiseAffineObjective, ObjectiveError> {
    let level_values = if family.len() == 1 {
        vec![g0]
    } else {
        assign_boundary_values(family, g0, g1)?
    };

    let mut pieces = Vec::new();
    let mut annuli = Vec::new();
    for a in 0..family.len().saturating_sub(1) {
        let inner = &family.sets()[a];
        let outer = &family.sets()[a + 1];
        let mut points: Vec<Point2> = inner.vertices().to_vec();
        points.extend_from_slice(outer.vertices());
        let inner_count = inner.vertices().len();
        let values: Vec<f64> = (0..points.len())
            .map(|i| {
                if i < inner_count {
                    level_values[a]
                } else {
                    level_values[a + 1]
                }
            })
            .collect();

        let triangles = delaunay_triangulate(&points)?;
        for tri in triangles {
            let centroid = tri.centroid(&points);
            // Keep annulus triangles only: inside the outer set but not
            // strictly interior to the inner one (where the base value or a
            // previous annulus already defines g).
            if !outer.contains(centroid, EPS_GEOM) || inner.contains(centroid, -EPS_GEOM) {
                continue;
            }
            if tri.area(&points) < EPS_AREA {
                return Err(ObjectiveError::DegenerateTriangle { annulus: a });
            }
            let [p0, p1, p2] = tri.vertices(&points);
            let vals = Vector3::new(
                values[tri.indices[0]],
                values[tri.indices[1]],
                values[tri.indices[2]],
            );
            let system = Matrix3::new(
                p0.x, p0.y, 1.0, //
                p1.x, p1.y, 1.0, //
                p2.x, p2.y, 1.0,
            );
            let coeffs = system
                .full_piv_lu()
                .solve(&vals)
                .ok_or(ObjectiveError::DegenerateTriangle { annulus: a })?;
            let piece = AffinePiece {
                alpha: Vector2::new(coeffs[0], coeffs[1]),
                beta: coeffs[2],
                triangle: tri,
                annulus: a,
            };
            // The fitted plane must pass through its defining points.
            for (p, v) in [(p0, vals[0]), (p1, vals[1]), (p2, vals[2])] {
                debug_assert!((piece.value(p) - v).abs() <= 1e-10 * (1.0 + v.abs()));
            }
            pieces.push(piece);
        }
        annuli.push(AnnulusMesh { points, values });
    }

    let objective = PiecewiseAffineObjective {
        base: family.innermost().clone(),
        base_value: level_values[0],
        pieces,
        level_values,
        family: family.clone(),
        annuli,
    };
    objective.check_vertex_agreement()?;
    Ok(objective)
}

/// Summary of the level-set and convexity checks.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidationReport {
    pub vertex_max_error: f64,
    pub monotonicity_violations: usize,
    pub convexity_violations: usize,
    pub samples_per_level: usize,
    pub pass: bool,
}

impl PiecewiseAffineObjective {
    pub fn base_region(&self) -> &Polytope2 {
        &self.base
    }

    pub fn base_value(&self) -> f64 {
        self.base_value
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    /// Values of the objective on the family's set boundaries, innermost
    /// first. These are the sublevel thresholds: `g(x) <= level_values[i]`
    /// iff `x` lies in family set `i` (up to validation tolerance).
    pub fn level_values(&self) -> &[f64] {
        &self.level_values
    }

    pub fn family(&self) -> &NestedFamily {
        &self.family
    }

    /// Max-form evaluation, defined on all of R²: the base value inside the
    /// innermost set, otherwise the maximum over all affine pieces clamped
    /// below by the base value.
    pub fn evaluate(&self, x: Point2) -> f64 {
        if self.base.contains(x, EPS_GEOM) {
            return self.base_value;
        }
        self.max_form_raw(x)
    }

    /// `max(g0, max_r α_rᵀx + β_r)` without the base-region short-circuit.
    fn max_form_raw(&self, x: Point2) -> f64 {
        let mut best = self.base_value;
        for piece in &self.pieces {
            best = best.max(piece.value(x));
        }
        best
    }

    /// Region-wise evaluation: locates the containing region (base region or
    /// annulus triangle, ties to the lowest piece index) and evaluates that
    /// single piece. Errors for points outside the outermost set.
    pub fn evaluate_interpolant(&self, x: Point2) -> Result<f64, ObjectiveError> {
        if self.base.contains(x, EPS_GEOM) {
            return Ok(self.base_value);
        }
        let mut best: Option<(f64, f64)> = None; // (worst barycentric deficit, value)
        for piece in &self.pieces {
            let [a, b, c] = piece.triangle.vertices(&self.annuli[piece.annulus].points);
            let area = cross(a, b, c);
            if area.abs() < EPS_AREA {
                continue;
            }
            let l0 = cross(x, b, c) / area;
            let l1 = cross(a, x, c) / area;
            let l2 = cross(a, b, x) / area;
            let deficit = l0.min(l1).min(l2);
            if deficit >= -1e-9 {
                return Ok(piece.value(x));
            }
            if best.is_none_or(|(d, _)| deficit > d) {
                best = Some((deficit, piece.value(x)));
            }
        }
        if !self.family.outermost().contains(x, EPS_GEOM) {
            return Err(ObjectiveError::OutsideDomain);
        }
        // Numerical seam between triangles: fall back to the nearest region.
        match best {
            Some((deficit, value)) if deficit > -1e-6 => Ok(value),
            _ => Err(ObjectiveError::OutsideDomain),
        }
    }

    /// Max error between the max-form and the assigned value over every
    /// triangulation vertex. This is the supporting-plane property made
    /// testable: no piece may rise above any vertex's assigned value.
    pub fn vertex_agreement_error(&self) -> f64 {
        let mut worst = 0.0_f64;
        for mesh in &self.annuli {
            for (p, v) in mesh.points.iter().zip(&mesh.values) {
                worst = worst.max((self.max_form_raw(*p) - v).abs());
            }
        }
        // Base-region vertices must sit at the base value as well.
        for p in self.base.vertices() {
            worst = worst.max((self.max_form_raw(*p) - self.base_value).abs());
        }
        worst
    }

    fn check_vertex_agreement(&self) -> Result<(), ObjectiveError> {
        let mut worst = (0.0_f64, Point2::zeros());
        for mesh in &self.annuli {
            for (p, v) in mesh.points.iter().zip(&mesh.values) {
                let err = (self.max_form_raw(*p) - v).abs();
                if err > worst.0 {
                    worst = (err, *p);
                }
            }
        }
        if worst.0 > EPS_VAL {
            return Err(ObjectiveError::ValidationFailure {
                vertex: (worst.1.x, worst.1.y),
                error: worst.0,
            });
        }
        Ok(())
    }

    /// Runs the full validation battery with the stated sample counts.
    pub fn validate(&self, samples_per_level: usize, seed: u64) -> ValidationReport {
        let vertex_max_error = self.vertex_agreement_error();

        // Level-set monotonicity: inside points never cost more than outside
        // points, per level.
        let mut monotonicity_violations = 0usize;
        let outer = self.family.outermost();
        for level in 1..self.family.len() {
            let inner = &self.family.sets()[level - 1];
            let mut found = 0usize;
            let mut attempt = 0u64;
            let stream = level as u64;
            while found < samples_per_level && attempt < 200 * samples_per_level as u64 {
                let x = sample_in(inner, seed ^ 0x11, stream, &mut attempt);
                let y = sample_in_difference(outer, inner, seed ^ 0x22, stream, &mut attempt);
                match (x, y) {
                    (Some(x), Some(y)) => {
                        found += 1;
                        if self.evaluate(x) > self.evaluate(y) + EPS_VAL {
                            monotonicity_violations += 1;
                        }
                    }
                    _ => break,
                }
            }
        }

        // Midpoint convexity over an inflated bounding box of the domain.
        let mut convexity_violations = 0usize;
        let (lo, hi) = outer.bounding_box();
        let span = hi - lo;
        let lo = lo - span * 0.1;
        let hi = hi + span * 0.1;
        for k in 0..samples_per_level as u64 {
            let x = Point2::new(
                lo.x + (hi.x - lo.x) * unit_f64(seed ^ 0x33, k, 0),
                lo.y + (hi.y - lo.y) * unit_f64(seed ^ 0x33, k, 1),
            );
            let y = Point2::new(
                lo.x + (hi.x - lo.x) * unit_f64(seed ^ 0x33, k, 2),
                lo.y + (hi.y - lo.y) * unit_f64(seed ^ 0x33, k, 3),
            );
            let mid = (x + y) / 2.0;
            if self.evaluate(mid) > 0.5 * (self.evaluate(x) + self.evaluate(y)) + EPS_VAL {
                convexity_violations += 1;
            }
        }

        ValidationReport {
            vertex_max_error,
            monotonicity_violations,
            convexity_violations,
            samples_per_level,
            pass: vertex_max_error <= EPS_VAL
                && monotonicity_violations == 0
                && convexity_violations == 0,
        }
    }
}

/// Default-battery validation (10⁴ samples per level, fixed seed).
pub fn validate_objective(objective: &PiecewiseAffineObjective) -> ValidationReport {
    objective.validate(10_000, 0)
}

fn sample_in(set: &Polytope2, seed: u64, stream: u64, attempt: &mut u64) -> Option<Point2> {
    let (lo, hi) = set.bounding_box();
    for _ in 0..10_000 {
        let k = *attempt;
        *attempt += 1;
        let p = Point2::new(
            lo.x + (hi.x - lo.x) * unit_f64(seed, stream, 2 * k),
            lo.y + (hi.y - lo.y) * unit_f64(seed, stream, 2 * k + 1),
        );
        if set.contains(p, 0.0) {
            return Some(p);
        }
    }
    None
}

fn sample_in_difference(
    outer: &Polytope2,
    excluded: &Polytope2,
    seed: u64,
    stream: u64,
    attempt: &mut u64,
) -> Option<Point2> {
    let (lo, hi) = outer.bounding_box();
    for _ in 0..10_000 {
        let k = *attempt;
        *attempt += 1;
        let p = Point2::new(
            lo.x + (hi.x - lo.x) * unit_f64(seed, stream, 2 * k),
            lo.y + (hi.y - lo.y) * unit_f64(seed, stream, 2 * k + 1),
        );
        if outer.contains(p, 0.0) && !excluded.contains(p, 0.0) {
            return Some(p);
        }
    }
    None
}
