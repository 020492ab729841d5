//! Deterministic instance generators and independent oracles for the test
//! suites. The oracles are reimplemented from first principles so production
//! code paths are checked against genuinely independent routes.

use crate::blameless::{CostWeights, OcpInstance, TerminalEquality};
use crate::dynamics::{
    condense_terminal, discretize_zoh, ContinuousAffineDynamics, DiscreteAffineDynamics, InputBox,
    TerminalSelector,
};
use crate::geometry::{NestedFamily, Point2, Polytope2};
use crate::ocp::QpProblem;
use nalgebra::{DMatrix, DVector, Matrix2};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

// ---------------------------------------------------------------------------
// Scenario builders
// ---------------------------------------------------------------------------

/// Planar powered-descent scenario: double-integrator lander with gravity,
/// five nested terminal boxes on (v_x, p_x), and box-bounded thrust.
pub struct LanderScenario {
    pub continuous: ContinuousAffineDynamics,
    pub instance: OcpInstance,
    pub family: NestedFamily,
}

pub fn lander() -> LanderScenario {
    let a = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0,
        ],
    );
    let b = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    let c = DVector::from_column_slice(&[0.0, -9.81, 0.0, 0.0]);
    let continuous = ContinuousAffineDynamics::new(
        a,
        b,
        c,
        vec!["v_x".into(), "v_y".into(), "p_x".into(), "p_y".into()],
    )
    .unwrap();
    let dynamics = discretize_zoh(&continuous, 0.2).unwrap();
    let selector = TerminalSelector::new([0, 2], 4).unwrap();
    let input_box = InputBox::new(
        DVector::from_column_slice(&[-10.0, 9.0]),
        DVector::from_column_slice(&[10.0, 30.0]),
    )
    .unwrap();
    let family = lander_family();
    let weights = CostWeights::new(
        DMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 1.0]),
        Matrix2::new(25.0, 0.0, 0.0, 25.0),
        family.innermost().vertex_centroid(),
    )
    .unwrap();
    let instance = OcpInstance {
        dynamics,
        x0: DVector::from_column_slice(&[-10.0, -5.0, -130.0, 100.0]),
        horizon: 60,
        input_box,
        selector,
        weights,
        terminal_equalities: vec![
            // Touch down: zero vertical velocity and altitude at the horizon.
            TerminalEquality {
                row: DVector::from_column_slice(&[0.0, 1.0, 0.0, 0.0]),
                value: 0.0,
            },
            TerminalEquality {
                row: DVector::from_column_slice(&[0.0, 0.0, 0.0, 1.0]),
                value: 0.0,
            },
        ],
    };
    LanderScenario {
        continuous,
        instance,
        family,
    }
}

/// The five nested (velocity, position) terminal boxes.
pub fn lander_family() -> NestedFamily {
    let bounds = [
        ((-0.5, -5.0), (0.5, 5.0)),
        ((-4.0, -15.0), (4.0, 12.0)),
        ((-7.0, -30.0), (7.0, 26.0)),
        ((-10.0, -40.0), (10.0, 35.0)),
        ((-15.0, -45.0), (15.0, 52.0)),
    ];
    NestedFamily::from_nested(
        bounds
            .iter()
            .map(|((vl, pl), (vh, ph))| {
                Polytope2::axis_aligned_box(Point2::new(*vl, *pl), Point2::new(*vh, *ph)).unwrap()
            })
            .collect(),
    )
    .unwrap()
}

// ---------------------------------------------------------------------------
// Random geometry generators
// ---------------------------------------------------------------------------

/// Random convex polygon with `k` vertices at well-spread angles on a
/// jittered ellipse. Spread angles avoid long flat sides, which keeps ring
/// unions in the regime where annulus triangulations stay mixed-ring.
pub fn random_convex_polygon(rng: &mut StdRng, k: usize, radius: f64, center: Point2) -> Polytope2 {
    loop {
        let spacing = std::f64::consts::TAU / k as f64;
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let angles: Vec<f64> = (0..k)
            .map(|i| phase + spacing * (i as f64 + rng.random_range(-0.3..0.3)))
            .collect();
        let rx = radius * rng.random_range(0.8..1.25);
        let ry = radius * rng.random_range(0.8..1.25);
        let pts: Vec<Point2> = angles
            .iter()
            .map(|t| {
                let r = rng.random_range(0.85..1.0);
                center + Point2::new(rx * r * t.cos(), ry * r * t.sin())
            })
            .collect();
        if let Ok(poly) = Polytope2::from_points(&pts) {
            if poly.vertices().len() == k {
                return poly;
            }
        }
    }
}

/// Nested polygon family built by repeatedly inflating a random inner
/// polygon about its centroid, which guarantees comfortable separation.
pub fn random_nested_polygon_family(rng: &mut StdRng, levels: usize) -> NestedFamily {
    let k = rng.random_range(5..10);
    let inner = random_convex_polygon(rng, k, 1.0, Point2::zeros());
    let centroid = inner.vertex_centroid();
    let mut sets = vec![inner.clone()];
    let mut scale = 1.0;
    for _ in 1..levels {
        scale *= rng.random_range(1.35..1.6);
        let pts: Vec<Point2> = inner
            .vertices()
            .iter()
            .map(|v| centroid + (v - centroid) * scale)
            .collect();
        sets.push(Polytope2::from_points(&pts).unwrap());
    }
    NestedFamily::from_nested(sets).unwrap()
}

/// Nested axis-aligned boxes with per-side margins of at least `min_gap`.
pub fn random_nested_box_family(rng: &mut StdRng, levels: usize, min_gap: f64) -> NestedFamily {
    let cx = rng.random_range(-5.0..5.0);
    let cy = rng.random_range(-5.0..5.0);
    let mut lo = Point2::new(
        cx - rng.random_range(0.5..2.0),
        cy - rng.random_range(0.5..2.0),
    );
    let mut hi = Point2::new(
        cx + rng.random_range(0.5..2.0),
        cy + rng.random_range(0.5..2.0),
    );
    let mut sets = vec![Polytope2::axis_aligned_box(lo, hi).unwrap()];
    for _ in 1..levels {
        lo = Point2::new(
            lo.x - min_gap - rng.random_range(0.0..1.5),
            lo.y - min_gap - rng.random_range(0.0..1.5),
        );
        hi = Point2::new(
            hi.x + min_gap + rng.random_range(0.0..1.5),
            hi.y + min_gap + rng.random_range(0.0..1.5),
        );
        sets.push(Polytope2::axis_aligned_box(lo, hi).unwrap());
    }
    NestedFamily::from_nested(sets).unwrap()
}

// ---------------------------------------------------------------------------
// Geometry oracles
// ---------------------------------------------------------------------------

/// Brute-force extreme-point test: `points[idx]` is extreme iff it lies in
/// no triangle of three other input points (O(n³) per point).
pub fn is_extreme_point_bruteforce(points: &[Point2], idx: usize) -> bool {
    let p = points[idx];
    let n = points.len();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                if i == idx || j == idx || k == idx {
                    continue;
                }
                if point_in_triangle(p, points[i], points[j], points[k], 1e-12) {
                    return false;
                }
            }
        }
    }
    true
}

fn point_in_triangle(p: Point2, a: Point2, b: Point2, c: Point2, tol: f64) -> bool {
    let cross =
        |o: Point2, u: Point2, v: Point2| (u.x - o.x) * (v.y - o.y) - (u.y - o.y) * (v.x - o.x);
    let d1 = cross(a, b, p);
    let d2 = cross(b, c, p);
    let d3 = cross(c, a, p);
    let has_neg = d1 < -tol || d2 < -tol || d3 < -tol;
    let has_pos = d1 > tol || d2 > tol || d3 > tol;
    !(has_neg && has_pos)
}

/// Winding-number point-in-polygon test (vertex loop in either orientation).
pub fn winding_number_contains(vertices: &[Point2], p: Point2) -> bool {
    let mut winding = 0i32;
    let n = vertices.len();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let is_left = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
        if a.y <= p.y {
            if b.y > p.y && is_left > 0.0 {
                winding += 1;
            }
        } else if b.y <= p.y && is_left < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

/// Independent empty-circumcircle check: recomputes every circumcircle from
/// scratch and tests all other points against it. Returns a violating
/// (triangle, point) pair if one exists.
pub fn delaunay_empty_circle_violation(
    points: &[Point2],
    triangles: &[[usize; 3]],
    tol: f64,
) -> Option<(usize, usize)> {
    for (t, tri) in triangles.iter().enumerate() {
        let (a, b, c) = (points[tri[0]], points[tri[1]], points[tri[2]]);
        let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
        if d.abs() < 1e-14 {
            return Some((t, usize::MAX));
        }
        let a2 = a.norm_squared();
        let b2 = b.norm_squared();
        let c2 = c.norm_squared();
        let center = Point2::new(
            (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d,
            (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d,
        );
        let radius = (a - center).norm();
        for (i, p) in points.iter().enumerate() {
            if tri.contains(&i) {
                continue;
            }
            if (p - center).norm() < radius - tol {
                return Some((t, i));
            }
        }
    }
    None
}

/// Dense boundary-sampling distance oracle with hierarchical refinement.
///
/// Both boundaries are sampled edge-by-edge; candidate segment pairs within a
/// safety band of the coarse minimum are re-sampled at 100x resolution twice,
/// for an effective 10⁴-samples-per-edge resolution. Returns `(min, max)`.
pub fn boundary_distance_sampling_oracle(p: &Polytope2, q: &Polytope2) -> (f64, f64) {
    let edges_p: Vec<(Point2, Point2)> = p.edges().collect();
    let edges_q: Vec<(Point2, Point2)> = q.edges().collect();

    let sample = |(a, b): (Point2, Point2), lo: f64, hi: f64, n: usize| -> Vec<Point2> {
        (0..=n)
            .map(|k| {
                let t = lo + (hi - lo) * k as f64 / n as f64;
                a + (b - a) * t
            })
            .collect()
    };

    let coarse = 100;
    let mut min_dist = f64::INFINITY;
    let mut max_dist = 0.0_f64;
    let mut pair_best: Vec<(usize, usize, f64)> = Vec::new();
    for (i, ep) in edges_p.iter().enumerate() {
        let sp = sample(*ep, 0.0, 1.0, coarse);
        for (j, eq) in edges_q.iter().enumerate() {
            let sq = sample(*eq, 0.0, 1.0, coarse);
            let mut best = f64::INFINITY;
            for a in &sp {
                for b in &sq {
                    let d = (a - b).norm();
                    best = best.min(d);
                    max_dist = max_dist.max(d);
                }
            }
            min_dist = min_dist.min(best);
            pair_best.push((i, j, best));
        }
    }

    let band = |e: (Point2, Point2)| (e.1 - e.0).norm() / coarse as f64;
    for (i, j, best) in pair_best {
        let safety = 2.0 * (band(edges_p[i]) + band(edges_q[j]));
        if best > min_dist + safety {
            continue;
        }
        let mut window_p = (0.0, 1.0);
        let mut window_q = (0.0, 1.0);
        for _ in 0..2 {
            let sp = sample(edges_p[i], window_p.0, window_p.1, coarse);
            let sq = sample(edges_q[j], window_q.0, window_q.1, coarse);
            let mut best_pair = (0usize, 0usize, f64::INFINITY);
            for (ai, a) in sp.iter().enumerate() {
                for (bi, b) in sq.iter().enumerate() {
                    let d = (a - b).norm();
                    if d < best_pair.2 {
                        best_pair = (ai, bi, d);
                    }
                }
            }
            min_dist = min_dist.min(best_pair.2);
            let shrink = |w: (f64, f64), at: usize| {
                let width: f64 = w.1 - w.0;
                let c = w.0 + width * at as f64 / coarse as f64;
                (
                    (c - width / coarse as f64).max(0.0),
                    (c + width / coarse as f64).min(1.0),
                )
            };
            window_p = shrink(window_p, best_pair.0);
            window_q = shrink(window_q, best_pair.1);
        }
    }
    (min_dist, max_dist)
}

// ---------------------------------------------------------------------------
// Solver oracles
// ---------------------------------------------------------------------------

/// Exhaustive active-set enumeration for small dense QPs: solves the
/// equality-constrained KKT system for every subset of the inequality
/// constraints and keeps the best primal-dual feasible candidate.
pub fn active_set_enumeration(p: &QpProblem) -> Option<(f64, DVector<f64>)> {
    let d = p.dim();
    let mi = p.g_ineq.nrows();
    let me = p.a_eq.nrows();
    assert!(mi <= 16, "enumeration oracle limited to small problems");
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0..(1u32 << mi) {
        let active: Vec<usize> = (0..mi).filter(|i| mask & (1 << i) != 0).collect();
        let na = active.len();
        let rows = na + me;
        let mut kkt = DMatrix::zeros(d + rows, d + rows);
        kkt.view_mut((0, 0), (d, d)).copy_from(&p.hess);
        let mut rhs = DVector::zeros(d + rows);
        rhs.rows_mut(0, d).copy_from(&(-&p.lin));
        for (r, &i) in active.iter().enumerate() {
            for j in 0..d {
                kkt[(d + r, j)] = p.g_ineq[(i, j)];
                kkt[(j, d + r)] = p.g_ineq[(i, j)];
            }
            rhs[d + r] = p.h_ineq[i];
        }
        for r in 0..me {
            for j in 0..d {
                kkt[(d + na + r, j)] = p.a_eq[(r, j)];
                kkt[(j, d + na + r)] = p.a_eq[(r, j)];
            }
            rhs[d + na + r] = p.b_eq[r];
        }
        let Some(sol) = kkt.full_piv_lu().solve(&rhs) else {
            continue;
        };
        let z = sol.rows(0, d).into_owned();
        let duals = sol.rows(d, na).into_owned();
        let slack = &p.h_ineq - &p.g_ineq * &z;
        if slack.iter().any(|s| *s < -1e-8) {
            continue;
        }
        if duals.iter().any(|l| *l < -1e-8) {
            continue;
        }
        if me > 0 && (&p.a_eq * &z - &p.b_eq).amax() > 1e-8 {
            continue;
        }
        let value = p.objective_value(&z);
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, z));
        }
    }
    best
}

/// Random strictly convex QP with a guaranteed-feasible constraint system:
/// inequalities hold with slack at a random witness point and equalities are
/// anchored exactly there.
pub fn random_feasible_qp(rng: &mut StdRng, dim: usize, n_ineq: usize, n_eq: usize) -> QpProblem {
    assert!(n_eq < dim.max(1));
    let m = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    let mut hess = &m * m.transpose();
    for i in 0..dim {
        hess[(i, i)] += 0.3;
    }
    let hess = (&hess + hess.transpose()) * 0.5;
    let lin = DVector::from_fn(dim, |_, _| rng.random_range(-2.0..2.0));
    let g = DMatrix::from_fn(n_ineq, dim, |_, _| rng.random_range(-1.0..1.0));
    let z_feas = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
    let slack = DVector::from_fn(n_ineq, |_, _| rng.random_range(0.1..1.5));
    let h = &g * &z_feas + slack;
    let a_eq = DMatrix::from_fn(n_eq, dim, |_, _| rng.random_range(-1.0..1.0));
    let b_eq = &a_eq * &z_feas;
    QpProblem::new(hess, lin, g, h, a_eq, b_eq).unwrap()
}

// ---------------------------------------------------------------------------
// Reachability oracle
// ---------------------------------------------------------------------------

/// 2D zonotope `center + Σ θ_k g_k, θ ∈ [-1, 1]`.
#[derive(Debug, Clone)]
pub struct Zonotope2 {
    pub center: Point2,
    pub generators: Vec<Point2>,
}

impl Zonotope2 {
    /// Exact membership via the facet-normal support test: for every
    /// generator direction `g` with normal `n ⟂ g`,
    /// `|n·(p − c)| <= Σ_j |n·g_j|`.
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        self.margin(p) >= -tol
    }

    /// Smallest facet slack of `p` (negative outside).
    pub fn margin(&self, p: Point2) -> f64 {
        let mut worst = f64::INFINITY;
        for g in &self.generators {
            let norm = g.norm();
            if norm < 1e-14 {
                continue;
            }
            let n = Point2::new(-g.y, g.x) / norm;
            let extent: f64 = self.generators.iter().map(|q| n.dot(q).abs()).sum();
            worst = worst.min(extent - n.dot(&(p - self.center)).abs());
        }
        worst
    }
}

/// Selector-projected terminal reachable set of an affine system under box
/// inputs, as an exact zonotope.
pub fn terminal_reachable_zonotope(
    dynamics: &DiscreteAffineDynamics,
    x0: &DVector<f64>,
    input_box: &InputBox,
    horizon: usize,
    selector: &TerminalSelector,
) -> Zonotope2 {
    let map = condense_terminal(dynamics, horizon, selector).unwrap();
    let mid = input_box.midpoint();
    let l = dynamics.input_dim();
    let mut stacked_mid = DVector::zeros(horizon * l);
    for e in 0..horizon * l {
        stacked_mid[e] = mid[e % l];
    }
    let center = map.projected_terminal(x0, &stacked_mid);
    let mut generators = Vec::with_capacity(horizon * l);
    for e in 0..horizon * l {
        let half = 0.5 * (input_box.upper[e % l] - input_box.lower[e % l]);
        let col = map.sel_gamma.column(e);
        generators.push(Point2::new(col[0] * half, col[1] * half));
    }
    Zonotope2 { center, generators }
}

/// Exact feasibility margin of `terminal ∈ box target` for the projected
/// reachable set: the zonotope and the box intersect iff the origin lies in
/// their Minkowski difference, itself a zonotope. Positive margin means
/// feasible; the extremal argument per facet normal is the bang-bang input.
pub fn reachable_box_margin(
    dynamics: &DiscreteAffineDynamics,
    x0: &DVector<f64>,
    input_box: &InputBox,
    horizon: usize,
    selector: &TerminalSelector,
    target: &Polytope2,
) -> f64 {
    let (lo, hi) = target.bounding_box();
    let z = terminal_reachable_zonotope(dynamics, x0, input_box, horizon, selector);
    let mut generators = z.generators.clone();
    generators.push(Point2::new((hi.x - lo.x) / 2.0, 0.0));
    generators.push(Point2::new(0.0, (hi.y - lo.y) / 2.0));
    let diff = Zonotope2 {
        center: z.center - Point2::new((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0),
        generators,
    };
    diff.margin(Point2::zeros())
}

// ---------------------------------------------------------------------------
// Random control instances
// ---------------------------------------------------------------------------

/// A generated problem with its family and, when engineered, the true
/// smallest feasible level.
pub struct RandomInstance {
    pub instance: OcpInstance,
    pub family: NestedFamily,
    pub engineered_level: Option<usize>,
}

/// Random 2-state instance over a nested box family placed so levels below
/// `target_level` are unreachable and `target_level` is comfortably
/// reachable.
///
/// Dynamics are componentwise decoupled (diagonal stable A and B), so the
/// terminal reachable set is exactly a coordinate box and the engineered
/// level is ground truth by interval arithmetic.
pub fn random_engineered_instance(
    rng: &mut StdRng,
    levels: usize,
    target_level: usize,
) -> RandomInstance {
    assert!(target_level >= 1 && target_level <= levels);
    let horizon = rng.random_range(6..14);
    // Contraction and gain ranges keep the reachable set a few units wide,
    // which keeps the boundary-value recursion numerically tame for deep
    // families (absolute vertex tolerance is 1e-8).
    let a1 = rng.random_range(0.3..0.7);
    let a2 = rng.random_range(0.3..0.7);
    let b1 = rng.random_range(0.5..1.0);
    let b2 = rng.random_range(0.5..1.0);
    let dynamics = DiscreteAffineDynamics::new(
        DMatrix::from_row_slice(2, 2, &[a1, 0.0, 0.0, a2]),
        DMatrix::from_row_slice(2, 2, &[b1, 0.0, 0.0, b2]),
        DVector::from_column_slice(&[rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)]),
        1.0,
    )
    .unwrap();
    let selector = TerminalSelector::new([0, 1], 2).unwrap();
    let u_max = rng.random_range(0.5..1.0);
    let input_box = InputBox::new(
        DVector::from_column_slice(&[-u_max, -u_max]),
        DVector::from_column_slice(&[u_max, u_max]),
    )
    .unwrap();
    let x0 =
        DVector::from_column_slice(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);

    // Exact per-coordinate reachable intervals (decoupled dynamics).
    let map = condense_terminal(&dynamics, horizon, &selector).unwrap();
    let mid = input_box.midpoint();
    let mut stacked_mid = DVector::zeros(horizon * 2);
    for e in 0..horizon * 2 {
        stacked_mid[e] = mid[e % 2];
    }
    let center = map.projected_terminal(&x0, &stacked_mid);
    let mut radius = Point2::zeros();
    for e in 0..horizon * 2 {
        let half = 0.5 * (input_box.upper[e % 2] - input_box.lower[e % 2]);
        radius.x += (map.sel_gamma[(0, e)] * half).abs();
        radius.y += (map.sel_gamma[(1, e)] * half).abs();
    }

    // Concentric boxes with geometrically doubling half-widths h_i = 2^(i-1)
    // about a center displaced from the reachable rectangle along x only.
    // Decoupled dynamics make the reachable set exactly the rectangle
    // `center ± radius`, so box i intersects it iff h_i >= D - radius.x:
    // placing D between h_{target-1} and h_target with relative margins makes
    // `target_level` the ground-truth smallest feasible level.
    let halves: Vec<f64> = (0..levels).map(|i| 2f64.powi(i as i32)).collect();
    let displacement = if target_level == 1 {
        0.0
    } else {
        radius.x + 1.4 * halves[target_level - 2]
    };
    let family_center = Point2::new(center.x + displacement, center.y);
    let sets: Vec<Polytope2> = halves
        .iter()
        .map(|h| {
            Polytope2::axis_aligned_box(
                family_center - Point2::new(*h, *h),
                family_center + Point2::new(*h, *h),
            )
            .unwrap()
        })
        .collect();
    let family = NestedFamily::from_nested(sets).unwrap();

    let q = random_spd(rng, 2);
    let weights = CostWeights::new(
        random_spd(rng, 2),
        Matrix2::new(q[(0, 0)], q[(0, 1)], q[(1, 0)], q[(1, 1)]),
        family.innermost().vertex_centroid(),
    )
    .unwrap();
    RandomInstance {
        instance: OcpInstance {
            dynamics,
            x0,
            horizon,
            input_box,
            selector,
            weights,
            terminal_equalities: vec![],
        },
        family,
        engineered_level: Some(target_level),
    }
}

/// Random double-integrator instance: state (velocity, position), one
/// bounded acceleration input, and a nested box family whose outermost level
/// is guaranteed reachable (anchored at an exactly reachable terminal point).
/// Inner levels may or may not be reachable; the brute-force loop is the
/// ground truth for these.
pub fn random_double_integrator_instance(rng: &mut StdRng) -> RandomInstance {
    let dt = rng.random_range(0.1..0.5);
    let horizon = rng.random_range(8..20);
    let dynamics = DiscreteAffineDynamics::new(
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, dt, 1.0]),
        DMatrix::from_row_slice(2, 1, &[dt, dt * dt / 2.0]),
        DVector::zeros(2),
        dt,
    )
    .unwrap();
    let selector = TerminalSelector::new([0, 1], 2).unwrap();
    let u_max = rng.random_range(0.5..2.0);
    let input_box = InputBox::new(
        DVector::from_column_slice(&[-u_max]),
        DVector::from_column_slice(&[u_max]),
    )
    .unwrap();
    let x0 =
        DVector::from_column_slice(&[rng.random_range(-2.0..2.0), rng.random_range(-5.0..5.0)]);

    // An exactly reachable terminal point from a random admissible input.
    let map = condense_terminal(&dynamics, horizon, &selector).unwrap();
    let stacked = DVector::from_fn(horizon, |_, _| rng.random_range(-u_max..u_max));
    let reachable = map.projected_terminal(&x0, &stacked);

    // Concentric boxes about an offset center; the outermost comfortably
    // covers the reachable anchor, inner levels shrink geometrically.
    let levels = rng.random_range(2..=6);
    let offset = Point2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
    let center = reachable + offset;
    let needed = offset.x.abs().max(offset.y.abs()) + 1.0;
    let halves: Vec<f64> = (0..levels)
        .map(|i| needed * 1.5f64.powi(i - levels + 1))
        .collect();
    let sets: Vec<Polytope2> = halves
        .iter()
        .map(|h| {
            Polytope2::axis_aligned_box(center - Point2::new(*h, *h), center + Point2::new(*h, *h))
                .unwrap()
        })
        .collect();
    let family = NestedFamily::from_nested(sets).unwrap();

    let q = random_spd(rng, 2);
    let weights = CostWeights::new(
        random_spd(rng, 1),
        Matrix2::new(q[(0, 0)], q[(0, 1)], q[(1, 0)], q[(1, 1)]),
        family.innermost().vertex_centroid(),
    )
    .unwrap();
    RandomInstance {
        instance: OcpInstance {
            dynamics,
            x0,
            horizon,
            input_box,
            selector,
            weights,
            terminal_equalities: vec![],
        },
        family,
        engineered_level: None,
    }
}

fn random_spd(rng: &mut StdRng, dim: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    let mut s = &m * m.transpose();
    for i in 0..dim {
        s[(i, i)] += 0.2;
    }
    (&s + s.transpose()) * 0.5
}

/// Deterministic rng for the batteries.
pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}
