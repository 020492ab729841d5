//! Decision algorithms over priority-ordered safety sets: the brute-force
//! lexicographic baseline, the two-stage blameless-optimal solve, a
//! pure-optimal comparison controller, and blameworthiness classification.

use crate::dynamics::{
    condense_terminal, rollout, CondensedMap, DiscreteAffineDynamics, DynamicsError, InputBox,
    TerminalSelector, Trajectory,
};
use crate::geometry::{NestedFamily, Point2, Polytope2};
use crate::objective::PiecewiseAffineObjective;
use crate::ocp::{
    min_violation_point, phase1_feasible, solve_lp_epigraph_constrained, solve_qp, OcpError,
    QpProblem, SolveReport, SolveStatus, RHO_EPIGRAPH, TAU_FEAS,
};
use nalgebra::{DMatrix, DVector, Matrix2};

#[derive(Debug, Clone, thiserror::Error)]
pub enum BlamelessError {
    #[error("no safety level is dynamically reachable (best violation {max_violation:.3e})")]
    NoBlamelessSolution { max_violation: f64 },
    #[error("stage 2 infeasible at level {level} (violation {violation:.3e})")]
    InfeasibleStage2 { level: usize, violation: f64 },
    #[error("solver did not reach optimality (status {status:?})")]
    NotOptimal { status: SolveStatus },
    #[error(transparent)]
    Solver(#[from] OcpError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Mission-cost weights: per-step input weight `R`, terminal weight `Q`,
/// and the terminal anchor point.
#[derive(Debug, Clone)]
pub struct CostWeights {
    pub r: DMatrix<f64>,
    pub q: Matrix2<f64>,
    pub center: Point2,
}

impl CostWeights {
    pub fn new(r: DMatrix<f64>, q: Matrix2<f64>, center: Point2) -> Result<Self, OcpError> {
        if r.nrows() != r.ncols() {
            return Err(OcpError::DimensionMismatch("input weight"));
        }
        if (&r - r.transpose()).amax() > 1e-12 * (1.0 + r.amax())
            || (q - q.transpose()).amax() > 1e-12 * (1.0 + q.amax())
        {
            return Err(OcpError::NotSymmetric);
        }
        let r_eigs = r.clone().symmetric_eigenvalues();
        let q_eigs = q.symmetric_eigenvalues();
        if r_eigs.iter().any(|e| *e < -1e-10) || q_eigs.iter().any(|e| *e < -1e-10) {
            return Err(OcpError::NotPsd);
        }
        Ok(Self { r, q, center })
    }
}

/// Terminal equality `row · x_N = value` on the full state.
#[derive(Debug, Clone)]
pub struct TerminalEquality {
    pub row: DVector<f64>,
    pub value: f64,
}

/// One optimal-control problem instance over a single initial state.
#[derive(Debug, Clone)]
pub struct OcpInstance {
    pub dynamics: DiscreteAffineDynamics,
    pub x0: DVector<f64>,
    pub horizon: usize,
    pub input_box: InputBox,
    pub selector: TerminalSelector,
    pub weights: CostWeights,
    pub terminal_equalities: Vec<TerminalEquality>,
}

impl OcpInstance {
    pub fn condense(&self) -> Result<CondensedMap, DynamicsError> {
        condense_terminal(&self.dynamics, self.horizon, &self.selector)
    }

    /// Input box replicated over the stacked input vector.
    fn stacked_box(&self) -> InputBox {
        let l = self.dynamics.input_dim();
        let nu = self.horizon * l;
        let lower = DVector::from_fn(nu, |i, _| self.input_box.lower[i % l]);
        let upper = DVector::from_fn(nu, |i, _| self.input_box.upper[i % l]);
        InputBox::new(lower, upper).expect("replicated box is valid")
    }

    fn unstack(&self, stacked: &DVector<f64>) -> Vec<DVector<f64>> {
        let l = self.dynamics.input_dim();
        (0..self.horizon)
            .map(|k| {
                DVector::from_fn(l, |i, _| {
                    // Clamp roundoff-level box spill so trajectories always
                    // re-validate against the hard input bounds.
                    stacked[k * l + i]
                        .max(self.input_box.lower[i])
                        .min(self.input_box.upper[i])
                })
            })
            .collect()
    }
}

/// Verdict of the blameworthiness classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Blameworthiness {
    Blameless,
    Blameworthy,
}

/// Classifier output: the smallest level the rollout actually lands in, and
/// the smallest level achievable at all.
#[derive(Debug, Clone)]
pub struct Classification {
    pub verdict: Blameworthiness,
    pub achieved_level: Option<usize>,
    pub oracle_level: Option<usize>,
}

/// Selected priority level, trajectory, and diagnostics of a solve.
#[derive(Debug, Clone)]
pub struct BlamelessSolution {
    /// 1-based priority level of the terminal safety set, innermost = 1.
    pub i_star: Option<usize>,
    pub trajectory: Trajectory,
    pub mission_cost: f64,
    /// Objective value reached by stage 1 (two-stage path only).
    pub stage1_value: Option<f64>,
    /// Solver reports, one per optimization actually solved.
    pub reports: Vec<SolveReport>,
    pub subproblem_count: usize,
    /// Selector-projected terminal point.
    pub terminal: Point2,
    /// Stage-1 cross-check: objective value at most the selected level's
    /// threshold within the feasibility tolerance.
    pub stage1_threshold_ok: Option<bool>,
}

/// `Σ_k u_kᵀRu_k + N (E x_N − c)ᵀ Q (E x_N − c)`: the per-step sum applies
/// the terminal regulation term at every one of the `N` steps.
pub fn mission_cost(traj: &Trajectory, weights: &CostWeights, selector: &TerminalSelector) -> f64 {
    let mut cost = 0.0;
    for u in &traj.inputs {
        cost += (u.transpose() * &weights.r * u)[0];
    }
    let d = selector.apply(traj.terminal()) - weights.center;
    cost + traj.horizon() as f64 * (d.transpose() * weights.q * d)[0]
}

/// Mission-cost QP over the stacked inputs, normalized so absolute KKT
/// tolerances are meaningful regardless of weight scale:
/// `H = 2[(I_N ⊗ R) + N WᵀQW]/κ`, `f = 2N WᵀQ(offset − c)/κ`.
fn mission_qp(
    instance: &OcpInstance,
    map: &CondensedMap,
    center: Point2,
    terminal_set: Option<&Polytope2>,
) -> Result<QpProblem, OcpError> {
    let l = instance.dynamics.input_dim();
    let nu = instance.horizon * l;
    let n_steps = instance.horizon as f64;

    let mut hess = DMatrix::zeros(nu, nu);
    for k in 0..instance.horizon {
        for i in 0..l {
            for j in 0..l {
                hess[(k * l + i, k * l + j)] = 2.0 * instance.weights.r[(i, j)];
            }
        }
    }
    let w = &map.sel_gamma;
    let q = DMatrix::from_row_slice(
        2,
        2,
        &[
            instance.weights.q[(0, 0)],
            instance.weights.q[(0, 1)],
            instance.weights.q[(1, 0)],
            instance.weights.q[(1, 1)],
        ],
    );
    hess += 2.0 * n_steps * w.transpose() * &q * w;
    let offset = map.projected_offset(&instance.x0);
    let dvec = DVector::from_column_slice(&[offset.x - center.x, offset.y - center.y]);
    let lin = 2.0 * n_steps * w.transpose() * &q * dvec;

    let kappa = hess.amax().max(1.0);
    let hess = hess / kappa;
    let lin = lin / kappa;

    // Inequalities: input box plus optional terminal-set facets.
    let set_rows = terminal_set.map_or(0, |s| s.halfspaces().len());
    let mut g = DMatrix::zeros(2 * nu + set_rows, nu);
    let mut h = DVector::zeros(2 * nu + set_rows);
    let mut r = 0;
    for i in 0..nu {
        g[(r, i)] = 1.0;
        h[r] = instance.input_box.upper[i % l];
        r += 1;
        g[(r, i)] = -1.0;
        h[r] = -instance.input_box.lower[i % l];
        r += 1;
    }
    if let Some(set) = terminal_set {
        for hs in set.halfspaces() {
            // n·(W u + offset) <= b, scaled to unit row norm.
            let row = hs.normal.transpose() * w;
            let mut scale: f64 = 1.0;
            for v in row.iter() {
                scale = scale.max(v.abs());
            }
            for j in 0..nu {
                g[(r, j)] = row[j] / scale;
            }
            h[r] = (hs.offset - hs.normal.dot(&offset)) / scale;
            r += 1;
        }
    }

    let (a_eq, b_eq) = equality_rows(instance, map)?;
    QpProblem::new(hess, lin, g, h, a_eq, b_eq)
}

/// Terminal equalities condensed onto the stacked inputs.
fn equality_rows(
    instance: &OcpInstance,
    map: &CondensedMap,
) -> Result<(DMatrix<f64>, DVector<f64>), OcpError> {
    let nu = map.gamma.ncols();
    let me = instance.terminal_equalities.len();
    let mut a = DMatrix::zeros(me, nu);
    let mut b = DVector::zeros(me);
    for (r, eq) in instance.terminal_equalities.iter().enumerate() {
        if eq.row.len() != instance.dynamics.state_dim() {
            return Err(OcpError::DimensionMismatch("terminal equality row"));
        }
        let row = eq.row.transpose() * &map.gamma;
        let rhs = eq.value - eq.row.dot(&(&map.phi * &instance.x0 + &map.omega));
        let mut scale: f64 = 1.0;
        for v in row.iter() {
            scale = scale.max(v.abs());
        }
        for j in 0..nu {
            a[(r, j)] = row[j] / scale;
        }
        b[r] = rhs / scale;
    }
    Ok((a, b))
}

/// Terminal-set facets condensed onto the stacked inputs (for feasibility
/// checks, without the box, which stays hard).
fn terminal_rows(
    map: &CondensedMap,
    x0: &DVector<f64>,
    set: &Polytope2,
) -> (DMatrix<f64>, DVector<f64>) {
    let nu = map.gamma.ncols();
    let offset = map.projected_offset(x0);
    let rows = set.halfspaces().len();
    let mut g = DMatrix::zeros(rows, nu);
    let mut h = DVector::zeros(rows);
    for (r, hs) in set.halfspaces().iter().enumerate() {
        let row = hs.normal.transpose() * &map.sel_gamma;
        let mut scale: f64 = 1.0;
        for v in row.iter() {
            scale = scale.max(v.abs());
        }
        for j in 0..nu {
            g[(r, j)] = row[j] / scale;
        }
        h[r] = (hs.offset - hs.normal.dot(&offset)) / scale;
    }
    (g, h)
}

/// Smallest 1-based level whose terminal set is reachable, via one phase-1
/// feasibility problem per level; also returns the smallest violation seen.
fn first_feasible_level(
    instance: &OcpInstance,
    family: &NestedFamily,
    map: &CondensedMap,
) -> Result<(Option<usize>, f64), BlamelessError> {
    let stacked = instance.stacked_box();
    let (a_eq, b_eq) = equality_rows(instance, map)?;
    let mut best_violation = f64::INFINITY;
    for level in 1..=family.len() {
        let (g, h) = terminal_rows(map, &instance.x0, family.level(level));
        let (feasible, violation) = phase1_feasible(&g, &h, &a_eq, &b_eq, &stacked)?;
        best_violation = best_violation.min(violation);
        if feasible {
            return Ok((Some(level), best_violation));
        }
    }
    Ok((None, best_violation))
}

fn require_optimal(report: SolveReport) -> Result<SolveReport, BlamelessError> {
    match report.status {
        SolveStatus::Optimal => Ok(report),
        SolveStatus::Infeasible => Err(BlamelessError::NotOptimal {
            status: SolveStatus::Infeasible,
        }),
        SolveStatus::MaxIterations => Err(BlamelessError::NotOptimal {
            status: SolveStatus::MaxIterations,
        }),
    }
}

fn solution_from_inputs(
    instance: &OcpInstance,
    stacked: &DVector<f64>,
    weights_center: Point2,
) -> (Trajectory, Point2, f64) {
    let inputs = instance.unstack(stacked);
    let traj = rollout(&instance.dynamics, &instance.x0, &inputs);
    let terminal = instance.selector.apply(traj.terminal());
    let weights = CostWeights {
        center: weights_center,
        ..instance.weights.clone()
    };
    let cost = mission_cost(&traj, &weights, &instance.selector);
    (traj, terminal, cost)
}

/// Lexicographic baseline: tightest level first, one optimization per level
/// until the terminal constraint is feasible.
pub fn brute_force_solve(
    instance: &OcpInstance,
    family: &NestedFamily,
) -> Result<BlamelessSolution, BlamelessError> {
    let map = instance.condense()?;
    let stacked_box = instance.stacked_box();
    let (a_eq, b_eq) = equality_rows(instance, &map)?;
    let mut best_violation = f64::INFINITY;
    for level in 1..=family.len() {
        let set = family.level(level);
        let (g, h) = terminal_rows(&map, &instance.x0, set);
        let (feasible, violation) = phase1_feasible(&g, &h, &a_eq, &b_eq, &stacked_box)?;
        best_violation = best_violation.min(violation);
        if !feasible {
            continue;
        }
        let center = set.vertex_centroid();
        let qp = mission_qp(instance, &map, center, Some(set))?;
        let report = require_optimal(solve_qp(&qp)?)?;
        let (trajectory, terminal, cost) = solution_from_inputs(instance, &report.z, center);
        return Ok(BlamelessSolution {
            i_star: Some(level),
            trajectory,
            mission_cost: cost,
            stage1_value: None,
            reports: vec![report],
            // One optimization attempted per level up to and including this one.
            subproblem_count: level,
            terminal,
            stage1_threshold_ok: None,
        });
    }
    Err(BlamelessError::NoBlamelessSolution {
        max_violation: best_violation,
    })
}

/// Outcome of the first stage of the two-stage solve.
#[derive(Debug, Clone)]
pub struct Stage1Selection {
    /// Smallest 1-based level containing the optimal terminal point.
    pub level: usize,
    pub terminal: Point2,
    /// Objective value at the terminal point (up to regularization error).
    pub value: f64,
    pub report: Option<SolveReport>,
    /// `value <= level threshold + TAU_FEAS`, kept as a cross-check of the
    /// geometric membership used to pick the level.
    pub threshold_ok: bool,
}

/// Stage 1: minimize the synthesized objective of the terminal state over
/// the dynamically feasible set (dynamics, input box, and any configured
/// terminal equalities), then read off the highest-priority set the optimal
/// terminal point lands in.
pub fn stage1_select(
    instance: &OcpInstance,
    objective: &PiecewiseAffineObjective,
) -> Result<Stage1Selection, BlamelessError> {
    let family = objective.family();
    let map = instance.condense()?;
    let (a_eq, b_eq) = equality_rows(instance, &map)?;

    // Terminal equalities are level-independent; if they cannot be met at
    // all, no safety level is reachable and the epigraph problem below would
    // lose its feasibility guarantee.
    if !instance.terminal_equalities.is_empty() {
        let stacked_box = instance.stacked_box();
        let nu = map.gamma.ncols();
        let (feasible, violation) = phase1_feasible(
            &DMatrix::zeros(0, nu),
            &DVector::zeros(0),
            &a_eq,
            &b_eq,
            &stacked_box,
        )?;
        if !feasible {
            return Err(BlamelessError::NoBlamelessSolution {
                max_violation: violation,
            });
        }
    }

    if family.len() == 1 || objective.pieces().is_empty() {
        // Flat objective: stage 1 degenerates to a feasibility problem.
        let stacked_box = instance.stacked_box();
        let (g, h) = terminal_rows(&map, &instance.x0, family.level(1));
        let (violation, z) = min_violation_point(&g, &h, &a_eq, &b_eq, &stacked_box)?;
        if violation > TAU_FEAS {
            return Err(BlamelessError::NoBlamelessSolution {
                max_violation: violation,
            });
        }
        let terminal = map.projected_terminal(&instance.x0, &z);
        return Ok(Stage1Selection {
            level: 1,
            terminal,
            value: objective.base_value(),
            report: None,
            threshold_ok: true,
        });
    }

    let pieces: Vec<_> = objective
        .pieces()
        .iter()
        .map(|p| (p.alpha, p.beta))
        .collect();
    let equalities = if a_eq.nrows() > 0 {
        Some((&a_eq, &b_eq))
    } else {
        None
    };
    let sol = solve_lp_epigraph_constrained(
        &pieces,
        &map,
        &instance.x0,
        &instance.input_box,
        objective.base_value(),
        RHO_EPIGRAPH,
        equalities,
    )?;
    let report = require_optimal(sol.report)?;
    let level = family
        .smallest_containing_level(sol.terminal, TAU_FEAS)
        .ok_or(BlamelessError::NoBlamelessSolution {
            max_violation: family.outermost().max_violation(sol.terminal),
        })?;
    let threshold_ok = sol.value <= objective.level_values()[level - 1] + TAU_FEAS;
    Ok(Stage1Selection {
        level,
        terminal: sol.terminal,
        value: sol.value,
        report: Some(report),
        threshold_ok,
    })
}

/// Stage 2: mission-optimal solve constrained to the selected safety set,
/// with the cost anchored at that set's vertex centroid.
pub fn stage2_optimize(
    instance: &OcpInstance,
    family: &NestedFamily,
    level: usize,
) -> Result<(Trajectory, SolveReport, Point2, f64), BlamelessError> {
    let map = instance.condense()?;
    let set = family.level(level);
    let center = set.vertex_centroid();
    let qp = mission_qp(instance, &map, center, Some(set))?;
    let report = solve_qp(&qp)?;
    if report.status == SolveStatus::Infeasible {
        return Err(BlamelessError::InfeasibleStage2 {
            level,
            violation: report.infeasibility.unwrap_or(f64::NAN),
        });
    }
    let report = require_optimal(report)?;
    let (trajectory, terminal, cost) = solution_from_inputs(instance, &report.z, center);
    Ok((trajectory, report, terminal, cost))
}

/// The two-stage solve: always exactly two optimizations.
pub fn two_stage_solve(
    instance: &OcpInstance,
    family: &NestedFamily,
    objective: &PiecewiseAffineObjective,
) -> Result<BlamelessSolution, BlamelessError> {
    let stage1 = stage1_select(instance, objective)?;
    let (trajectory, report, terminal, cost) = stage2_optimize(instance, family, stage1.level)?;
    let mut reports = Vec::new();
    if let Some(r) = stage1.report {
        reports.push(r);
    }
    reports.push(report);
    Ok(BlamelessSolution {
        i_star: Some(stage1.level),
        trajectory,
        mission_cost: cost,
        stage1_value: Some(stage1.value),
        reports,
        subproblem_count: 2,
        terminal,
        stage1_threshold_ok: Some(stage1.threshold_ok),
    })
}

/// Comparison controller: single mission-cost QP with no terminal safety
/// constraint, anchored at the instance's configured center (conventionally
/// the innermost set's centroid).
pub fn pure_optimal_solve(
    instance: &OcpInstance,
) -> Result<(Trajectory, SolveReport, Point2, f64), BlamelessError> {
    let map = instance.condense()?;
    let qp = mission_qp(instance, &map, instance.weights.center, None)?;
    let report = require_optimal(solve_qp(&qp)?)?;
    let (trajectory, terminal, cost) =
        solution_from_inputs(instance, &report.z, instance.weights.center);
    Ok((trajectory, report, terminal, cost))
}

/// Rolls the inputs out and compares the achieved safety level against the
/// best achievable one. Terminal points within [`TAU_FEAS`] of a set boundary
/// classify to the smaller level.
pub fn classify_blameworthiness(
    inputs: &[DVector<f64>],
    instance: &OcpInstance,
    family: &NestedFamily,
) -> Result<Classification, BlamelessError> {
    let traj = rollout(&instance.dynamics, &instance.x0, inputs);
    let terminal = instance.selector.apply(traj.terminal());
    let achieved_level = family.smallest_containing_level(terminal, TAU_FEAS);
    let map = instance.condense()?;
    let (oracle_level, _) = first_feasible_level(instance, family, &map)?;
    let verdict = match (oracle_level, achieved_level) {
        (Some(best), Some(got)) if got > best => Blameworthiness::Blameworthy,
        (Some(_), None) => Blameworthiness::Blameworthy,
        _ => Blameworthiness::Blameless,
    };
    Ok(Classification {
        verdict,
        achieved_level,
        oracle_level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polytope2;
    use crate::objective::generate_objective;

    fn vec2(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    /// 1-step planar integrator x_1 = u with u ∈ [0,1] × [-0.5,0.5].
    fn one_step_instance() -> OcpInstance {
        let dynamics = DiscreteAffineDynamics::new(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DVector::zeros(2),
            1.0,
        )
        .unwrap();
        OcpInstance {
            dynamics,
            x0: vec2(&[0.0, 0.0]),
            horizon: 1,
            input_box: InputBox::new(vec2(&[0.0, -0.5]), vec2(&[1.0, 0.5])).unwrap(),
            selector: TerminalSelector::new([0, 1], 2).unwrap(),
            weights: CostWeights::new(
                DMatrix::identity(2, 2),
                Matrix2::identity(),
                Point2::new(0.0, 0.0),
            )
            .unwrap(),
            terminal_equalities: vec![],
        }
    }

    fn band_family() -> NestedFamily {
        // Level 1 needs x >= 2, unreachable in one step; level 2 is a band
        // whose centroid (1.75, 0) pulls the optimum strictly inside it.
        NestedFamily::from_nested(vec![
            Polytope2::axis_aligned_box(Point2::new(2.0, -1.0), Point2::new(2.8, 1.0)).unwrap(),
            Polytope2::axis_aligned_box(Point2::new(0.5, -2.0), Point2::new(3.0, 2.0)).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn mission_cost_examples() {
        let instance = one_step_instance();
        // Zero inputs, terminal at the anchor: zero cost.
        let traj = rollout(&instance.dynamics, &instance.x0, &[vec2(&[0.0, 0.0])]);
        assert_eq!(
            mission_cost(&traj, &instance.weights, &instance.selector),
            0.0
        );
        // Two steps, R = I, unit inputs, terminal at the anchor.
        let dynamics = DiscreteAffineDynamics::new(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DVector::zeros(2),
            1.0,
        )
        .unwrap();
        let traj = rollout(
            &dynamics,
            &vec2(&[0.0, 0.0]),
            &[vec2(&[1.0, 0.0]), vec2(&[0.0, 0.0])],
        );
        let weights = CostWeights::new(
            DMatrix::identity(2, 2),
            Matrix2::identity(),
            Point2::new(0.0, 0.0),
        )
        .unwrap();
        let sel = TerminalSelector::new([0, 1], 2).unwrap();
        assert_eq!(mission_cost(&traj, &weights, &sel), 1.0);
    }

    #[test]
    fn brute_force_skips_unreachable_band() {
        let instance = one_step_instance();
        let family = band_family();
        let sol = brute_force_solve(&instance, &family).unwrap();
        assert_eq!(sol.i_star, Some(2));
        assert_eq!(sol.subproblem_count, 2);
        // By hand: min u₀² + (u₀ − 1.75)² over u₀ ∈ [0.5, 1] → u₀ = 0.875.
        assert!((sol.terminal.x - 0.875).abs() < 1e-5, "{:?}", sol.terminal);
        assert!(sol.terminal.y.abs() < 1e-5);
        assert!((sol.mission_cost - 2.0 * 0.875 * 0.875).abs() < 1e-4);
    }

    #[test]
    fn two_stage_matches_brute_force_on_band() {
        let instance = one_step_instance();
        let family = band_family();
        let objective = generate_objective(&family, 0.0, 1.0).unwrap();
        let brute = brute_force_solve(&instance, &family).unwrap();
        let two = two_stage_solve(&instance, &family, &objective).unwrap();
        assert_eq!(two.i_star, brute.i_star);
        assert_eq!(two.subproblem_count, 2);
        assert!((two.mission_cost - brute.mission_cost).abs() < 1e-5);
        assert!((two.terminal - brute.terminal).norm() < 1e-4);
        assert_eq!(two.stage1_threshold_ok, Some(true));
    }

    #[test]
    fn reachable_innermost_set_is_selected_first() {
        let instance = one_step_instance();
        let family = NestedFamily::from_nested(vec![
            Polytope2::axis_aligned_box(Point2::new(0.2, -0.3), Point2::new(0.8, 0.3)).unwrap(),
            Polytope2::axis_aligned_box(Point2::new(-1.0, -1.0), Point2::new(2.0, 1.0)).unwrap(),
        ])
        .unwrap();
        let sol = brute_force_solve(&instance, &family).unwrap();
        assert_eq!(sol.i_star, Some(1));
        assert_eq!(sol.subproblem_count, 1);
        let objective = generate_objective(&family, 0.0, 1.0).unwrap();
        let two = two_stage_solve(&instance, &family, &objective).unwrap();
        assert_eq!(two.i_star, Some(1));
    }

    #[test]
    fn nothing_reachable_errors() {
        let instance = one_step_instance();
        let family = NestedFamily::from_nested(vec![
            Polytope2::axis_aligned_box(Point2::new(5.0, 5.0), Point2::new(6.0, 6.0)).unwrap(),
            Polytope2::axis_aligned_box(Point2::new(4.0, 4.0), Point2::new(7.0, 7.0)).unwrap(),
        ])
        .unwrap();
        match brute_force_solve(&instance, &family) {
            Err(BlamelessError::NoBlamelessSolution { max_violation }) => {
                assert!(max_violation > 1.0);
            }
            other => panic!("expected NoBlamelessSolution, got {other:?}"),
        }
    }

    #[test]
    fn pure_optimal_ignores_safety() {
        let mut instance = one_step_instance();
        let family = band_family();
        // Anchor at the innermost center: (2.5, 0), far outside reach.
        instance.weights.center = family.innermost().vertex_centroid();
        let (traj, report, terminal, _) = pure_optimal_solve(&instance).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!(traj
            .validate(&instance.dynamics, &instance.input_box)
            .is_ok());
        // min u² + (u − 2.5)² over [0, 1] → u = 1 (boundary).
        assert!((terminal.x - 1.0).abs() < 1e-5);
    }

    #[test]
    fn classifier_flags_lazy_rollout() {
        let instance = one_step_instance();
        let family = band_family();
        // Inputs that stay at the origin while level 2 is reachable.
        let classification =
            classify_blameworthiness(&[vec2(&[0.0, 0.0])], &instance, &family).unwrap();
        assert_eq!(classification.verdict, Blameworthiness::Blameworthy);
        assert_eq!(classification.achieved_level, None);
        assert_eq!(classification.oracle_level, Some(2));

        // The two-stage inputs classify as blameless.
        let objective = generate_objective(&family, 0.0, 1.0).unwrap();
        let sol = two_stage_solve(&instance, &family, &objective).unwrap();
        let classification =
            classify_blameworthiness(&sol.trajectory.inputs, &instance, &family).unwrap();
        assert_eq!(classification.verdict, Blameworthiness::Blameless);
        assert_eq!(classification.achieved_level, Some(2));
    }

    #[test]
    fn stage1_honors_coupled_terminal_equalities() {
        // Equality x_N[0] = 0.8 makes the innermost box unreachable even
        // though it is reachable without it; stage 1 must see that.
        let mut instance = one_step_instance();
        instance.input_box = InputBox::new(vec2(&[-1.0, -1.0]), vec2(&[1.0, 1.0])).unwrap();
        instance.terminal_equalities = vec![TerminalEquality {
            row: vec2(&[1.0, 0.0]),
            value: 0.8,
        }];
        let family = NestedFamily::from_nested(vec![
            Polytope2::axis_aligned_box(Point2::new(-0.3, -0.3), Point2::new(0.3, 0.3)).unwrap(),
            Polytope2::axis_aligned_box(Point2::new(-1.5, -1.5), Point2::new(1.5, 1.5)).unwrap(),
        ])
        .unwrap();
        let objective = generate_objective(&family, 0.0, 1.0).unwrap();
        let brute = brute_force_solve(&instance, &family).unwrap();
        let two = two_stage_solve(&instance, &family, &objective).unwrap();
        assert_eq!(brute.i_star, Some(2));
        assert_eq!(two.i_star, Some(2));
        assert!((two.terminal.x - 0.8).abs() < 1e-6);
        assert!((two.mission_cost - brute.mission_cost).abs() < 1e-6);
    }

    #[test]
    fn single_level_family_reduces_to_feasibility() {
        let instance = one_step_instance();
        let family = NestedFamily::from_nested(vec![Polytope2::axis_aligned_box(
            Point2::new(0.2, -0.4),
            Point2::new(0.9, 0.4),
        )
        .unwrap()])
        .unwrap();
        let objective = generate_objective(&family, 0.0, 1.0).unwrap();
        let stage1 = stage1_select(&instance, &objective).unwrap();
        assert_eq!(stage1.level, 1);
        assert!(family.level(1).contains(stage1.terminal, 1e-6));
        let two = two_stage_solve(&instance, &family, &objective).unwrap();
        assert_eq!(two.i_star, Some(1));
        assert_eq!(two.subproblem_count, 2);
    }

    #[test]
    fn infeasible_equalities_fail_consistently() {
        // Equality outside the one-step reachable range: both algorithms must
        // report that nothing is reachable, not a stage mismatch.
        let mut instance = one_step_instance();
        instance.terminal_equalities = vec![TerminalEquality {
            row: vec2(&[1.0, 0.0]),
            value: 5.0,
        }];
        let family = band_family();
        let objective = generate_objective(&family, 0.0, 1.0).unwrap();
        assert!(matches!(
            brute_force_solve(&instance, &family),
            Err(BlamelessError::NoBlamelessSolution { .. })
        ));
        assert!(matches!(
            two_stage_solve(&instance, &family, &objective),
            Err(BlamelessError::NoBlamelessSolution { .. })
        ));
    }

    #[test]
    fn stage2_anchors_at_selected_level_centroid() {
        let instance = one_step_instance();
        let family = NestedFamily::from_nested(vec![
            Polytope2::axis_aligned_box(Point2::new(0.1, -0.3), Point2::new(0.6, 0.3)).unwrap(),
            Polytope2::axis_aligned_box(Point2::new(-1.0, -1.0), Point2::new(2.0, 1.0)).unwrap(),
        ])
        .unwrap();
        let (_, _, terminal, _) = stage2_optimize(&instance, &family, 1).unwrap();
        // Unconstrained optimum of u² + (u − 0.35)² is u = 0.175, strictly
        // inside level 1.
        assert!((terminal.x - 0.175).abs() < 1e-5);
    }
}
