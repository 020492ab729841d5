//! Priority-ordered safety sets recast as a validated nested family.

use super::{
    boundary_min_distance, intersect, GeometryError, Point2, Polytope2, EPS_GEOM, EPS_SEP,
};

/// Nested sets `Y_1 ⊆ … ⊆ Y_m` with validated nesting and boundary separation.
///
/// `sets()[0]` is the innermost, highest-priority set.
#[derive(Debug, Clone)]
pub struct NestedFamily {
    sets: Vec<Polytope2>,
}

impl NestedFamily {
    /// Validates an already-nested list (innermost first).
    pub fn from_nested(sets: Vec<Polytope2>) -> Result<Self, GeometryError> {
        if sets.is_empty() {
            return Err(GeometryError::DegenerateInput("empty family"));
        }
        for i in 0..sets.len() - 1 {
            let (inner, outer) = (&sets[i], &sets[i + 1]);
            for v in inner.vertices() {
                if !outer.contains(*v, EPS_GEOM) {
                    return Err(GeometryError::NotNested);
                }
            }
            let gap = boundary_min_distance(inner, outer)?;
            if gap < EPS_SEP {
                return Err(GeometryError::BoundaryOverlap { gap, min: EPS_SEP });
            }
        }
        Ok(Self { sets })
    }

    /// Builds the family from priority-ordered sets `Z_1, …, Z_m`
    /// (`Z_1` most important): `Y_i = ⋂_{j=1}^{m+1-i} Z_j`, so `Y_m = Z_1`
    /// and `Y_1` is the intersection of all of them.
    pub fn from_prioritized(prioritized: &[Polytope2]) -> Result<Self, GeometryError> {
        if prioritized.is_empty() {
            return Err(GeometryError::DegenerateInput("empty family"));
        }
        let mut acc = prioritized[0].clone();
        let mut sets_rev = vec![acc.clone()];
        for z in &prioritized[1..] {
            acc = intersect(&acc, z)?;
            sets_rev.push(acc.clone());
        }
        sets_rev.reverse();
        Self::from_nested(sets_rev)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> &[Polytope2] {
        &self.sets
    }

    /// Set at 1-based priority level `i` (1 = innermost).
    pub fn level(&self, i: usize) -> &Polytope2 {
        &self.sets[i - 1]
    }

    pub fn innermost(&self) -> &Polytope2 {
        &self.sets[0]
    }

    pub fn outermost(&self) -> &Polytope2 {
        self.sets.last().expect("family is non-empty")
    }

    /// Smallest 1-based level whose set contains `p` within `tol`, if any.
    pub fn smallest_containing_level(&self, p: Point2, tol: f64) -> Option<usize> {
        self.sets
            .iter()
            .position(|s| s.contains(p, tol))
            .map(|i| i + 1)
    }
}
