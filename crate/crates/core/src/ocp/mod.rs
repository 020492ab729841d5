//! Dense convex QP/LP solving over condensed input vectors, with feasibility
//! detection and KKT verification.

mod ipm;

pub use ipm::WarmStart;

use crate::dynamics::{CondensedMap, InputBox};
use crate::geometry::Point2;
use nalgebra::{DMatrix, DVector, Vector2};

/// Residual tolerance for an `Optimal` verdict.
pub const TAU_KKT: f64 = 1e-8;
/// Constraint-violation tolerance for feasibility verdicts.
pub const TAU_FEAS: f64 = 1e-6;
/// Quadratic regularization weight used to solve epigraph LPs as QPs.
pub const RHO_EPIGRAPH: f64 = 1e-8;
/// Interior-point iteration cap.
pub const MAX_ITERS: usize = 200;

#[derive(Debug, Clone, thiserror::Error)]
pub enum OcpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
    #[error("quadratic cost is not positive semidefinite")]
    NotPsd,
    #[error("quadratic cost is not symmetric")]
    NotSymmetric,
    #[error("solver diverged: {0}")]
    IllConditioned(&'static str),
}

/// `min ½ zᵀ hess z + linᵀ z  s.t.  g_ineq z <= h_ineq, a_eq z = b_eq`.
#[derive(Debug, Clone)]
pub struct QpProblem {
    pub hess: DMatrix<f64>,
    pub lin: DVector<f64>,
    pub g_ineq: DMatrix<f64>,
    pub h_ineq: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
}

impl QpProblem {
    pub fn new(
        hess: DMatrix<f64>,
        lin: DVector<f64>,
        g_ineq: DMatrix<f64>,
        h_ineq: DVector<f64>,
        a_eq: DMatrix<f64>,
        b_eq: DVector<f64>,
    ) -> Result<Self, OcpError> {
        let d = lin.len();
        if hess.nrows() != d || hess.ncols() != d {
            return Err(OcpError::DimensionMismatch("hessian"));
        }
        if g_ineq.ncols() != d && g_ineq.nrows() != 0 {
            return Err(OcpError::DimensionMismatch("inequality matrix"));
        }
        if g_ineq.nrows() != h_ineq.len() {
            return Err(OcpError::DimensionMismatch("inequality rhs"));
        }
        if a_eq.ncols() != d && a_eq.nrows() != 0 {
            return Err(OcpError::DimensionMismatch("equality matrix"));
        }
        if a_eq.nrows() != b_eq.len() {
            return Err(OcpError::DimensionMismatch("equality rhs"));
        }
        if (&hess - hess.transpose()).amax() > 1e-12 * (1.0 + hess.amax()) {
            return Err(OcpError::NotSymmetric);
        }
        Ok(Self {
            hess,
            lin,
            g_ineq,
            h_ineq,
            a_eq,
            b_eq,
        })
    }

    /// Unconstrained problem.
    pub fn unconstrained(hess: DMatrix<f64>, lin: DVector<f64>) -> Result<Self, OcpError> {
        let d = lin.len();
        Self::new(
            hess,
            lin,
            DMatrix::zeros(0, d),
            DVector::zeros(0),
            DMatrix::zeros(0, d),
            DVector::zeros(0),
        )
    }

    pub fn dim(&self) -> usize {
        self.lin.len()
    }

    pub fn objective_value(&self, z: &DVector<f64>) -> f64 {
        0.5 * (z.dot(&(&self.hess * z))) + self.lin.dot(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

/// Infinity norms of the three first-order optimality residuals.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub(crate) fn compute(
        p: &QpProblem,
        z: &DVector<f64>,
        ineq_duals: &DVector<f64>,
        eq_duals: &DVector<f64>,
    ) -> Self {
        let stat = &p.hess * z
            + &p.lin
            + p.g_ineq.transpose() * ineq_duals
            + p.a_eq.transpose() * eq_duals;
        let slack = &p.h_ineq - &p.g_ineq * z;
        let mut primal = 0.0_f64;
        for v in (-&slack).iter() {
            primal = primal.max(*v);
        }
        let eq_res = &p.a_eq * z - &p.b_eq;
        for v in eq_res.iter() {
            primal = primal.max(v.abs());
        }
        let mut comp = 0.0_f64;
        for i in 0..slack.len() {
            comp = comp.max((ineq_duals[i] * slack[i]).abs());
        }
        Self {
            stationarity: stat.amax(),
            primal: primal.max(0.0),
            complementarity: comp,
        }
    }

    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.complementarity)
    }
}

/// Returns `(‖stationarity‖∞, ‖primal violation‖∞, ‖complementarity‖∞)` at
/// the supplied primal/dual point.
pub fn kkt_residuals(
    p: &QpProblem,
    z: &DVector<f64>,
    ineq_duals: &DVector<f64>,
    eq_duals: &DVector<f64>,
) -> KktResiduals {
    KktResiduals::compute(p, z, ineq_duals, eq_duals)
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub z: DVector<f64>,
    pub objective: f64,
    pub ineq_duals: DVector<f64>,
    pub eq_duals: DVector<f64>,
    pub residuals: KktResiduals,
    pub iterations: usize,
    /// Phase-1 certificate accompanying an `Infeasible` verdict.
    pub infeasibility: Option<f64>,
}

fn check_psd(hess: &DMatrix<f64>) -> Result<(), OcpError> {
    let eig = hess.clone().symmetric_eigenvalues();
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-10 * (1.0 + hess.amax()) {
        return Err(OcpError::NotPsd);
    }
    Ok(())
}

/// Solves the QP. `Optimal` reports satisfy all three KKT residuals within
/// [`TAU_KKT`]; non-converged constrained problems are classified by a
/// phase-1 solve, yielding `Infeasible` with its violation certificate.
pub fn solve_qp(p: &QpProblem) -> Result<SolveReport, OcpError> {
    check_psd(&p.hess)?;
    solve_prepared(p, None)
}

/// Same as [`solve_qp`] but seeds the interior-point iteration at a known
/// strictly feasible point. The PSD check is the caller's responsibility.
pub(crate) fn solve_prepared(
    p: &QpProblem,
    warm: Option<&WarmStart>,
) -> Result<SolveReport, OcpError> {
    let outcome = ipm::minimize(p, warm);
    if let Some(reason) = outcome.failure {
        if reason == "iterates diverged" || reason == "singular KKT factorization" {
            // Distinguish divergence caused by infeasibility from true
            // conditioning trouble before giving up.
            if let Some(cert) = infeasibility_certificate(p)? {
                return Ok(infeasible_report(p, cert));
            }
            return Err(OcpError::IllConditioned(reason));
        }
    }
    match outcome.status {
        SolveStatus::Optimal => {
            let residuals =
                KktResiduals::compute(p, &outcome.z, &outcome.ineq_duals, &outcome.eq_duals);
            let objective = p.objective_value(&outcome.z);
            Ok(SolveReport {
                status: SolveStatus::Optimal,
                objective,
                residuals,
                z: outcome.z,
                ineq_duals: outcome.ineq_duals,
                eq_duals: outcome.eq_duals,
                iterations: outcome.iterations,
                infeasibility: None,
            })
        }
        _ => {
            if p.g_ineq.nrows() + p.a_eq.nrows() > 0 {
                if let Some(cert) = infeasibility_certificate(p)? {
                    return Ok(infeasible_report(p, cert));
                }
            }
            let residuals =
                KktResiduals::compute(p, &outcome.z, &outcome.ineq_duals, &outcome.eq_duals);
            let objective = p.objective_value(&outcome.z);
            Ok(SolveReport {
                status: SolveStatus::MaxIterations,
                objective,
                residuals,
                z: outcome.z,
                ineq_duals: outcome.ineq_duals,
                eq_duals: outcome.eq_duals,
                iterations: outcome.iterations,
                infeasibility: None,
            })
        }
    }
}

fn infeasible_report(p: &QpProblem, cert: f64) -> SolveReport {
    let d = p.dim();
    SolveReport {
        status: SolveStatus::Infeasible,
        z: DVector::zeros(d),
        objective: f64::NAN,
        ineq_duals: DVector::zeros(p.g_ineq.nrows()),
        eq_duals: DVector::zeros(p.a_eq.nrows()),
        residuals: KktResiduals {
            stationarity: f64::NAN,
            primal: cert,
            complementarity: f64::NAN,
        },
        iterations: 0,
        infeasibility: Some(cert),
    }
}

/// Minimum achievable worst-case violation of the constraint system, or
/// `None` when it is below [`TAU_FEAS`] (i.e. the system is feasible).
fn infeasibility_certificate(p: &QpProblem) -> Result<Option<f64>, OcpError> {
    let (violation, _) = min_violation(&p.g_ineq, &p.h_ineq, &p.a_eq, &p.b_eq, None)?;
    if violation > TAU_FEAS {
        Ok(Some(violation))
    } else {
        Ok(None)
    }
}

/// Epigraph phase-1: minimize the scalar bound `t >= 0` dominating every
/// relaxable constraint violation, with optional hard box rows on `z`.
/// Returns the optimal `t` and the minimizing `z`.
fn min_violation(
    g: &DMatrix<f64>,
    h: &DVector<f64>,
    a_eq: &DMatrix<f64>,
    b_eq: &DVector<f64>,
    hard_box: Option<&InputBox>,
) -> Result<(f64, DVector<f64>), OcpError> {
    let d = g.ncols().max(a_eq.ncols());
    let mi = g.nrows();
    let me = a_eq.nrows();
    let n_box = hard_box.map_or(0, |b| 2 * b.dim());
    let rows = mi + 2 * me + 1 + n_box;

    let mut gg = DMatrix::zeros(rows, d + 1);
    let mut hh = DVector::zeros(rows);
    let mut r = 0;
    for i in 0..mi {
        for j in 0..d {
            gg[(r, j)] = g[(i, j)];
        }
        gg[(r, d)] = -1.0;
        hh[r] = h[i];
        r += 1;
    }
    for i in 0..me {
        for j in 0..d {
            gg[(r, j)] = a_eq[(i, j)];
        }
        gg[(r, d)] = -1.0;
        hh[r] = b_eq[i];
        r += 1;
        for j in 0..d {
            gg[(r, j)] = -a_eq[(i, j)];
        }
        gg[(r, d)] = -1.0;
        hh[r] = -b_eq[i];
        r += 1;
    }
    gg[(r, d)] = -1.0; // t >= 0
    hh[r] = 0.0;
    r += 1;
    if let Some(bx) = hard_box {
        for i in 0..bx.dim() {
            gg[(r, i)] = 1.0;
            hh[r] = bx.upper[i];
            r += 1;
            gg[(r, i)] = -1.0;
            hh[r] = -bx.lower[i];
            r += 1;
        }
    }

    // Tiny curvature on z keeps the reduced system nonsingular along
    // directions no constraint touches; it biases t by at most 1e-12·‖z‖².
    let mut hess = DMatrix::zeros(d + 1, d + 1);
    for i in 0..d {
        hess[(i, i)] = 2.0 * 1e-12;
    }
    let mut lin = DVector::zeros(d + 1);
    lin[d] = 1.0;

    let problem = QpProblem::new(
        hess,
        lin,
        gg,
        hh,
        DMatrix::zeros(0, d + 1),
        DVector::zeros(0),
    )?;

    // Strictly feasible start: z in the box (or 0), t above every violation.
    let z0 = match hard_box {
        Some(bx) => bx.midpoint(),
        None => DVector::zeros(d),
    };
    let mut t0 = 1.0_f64;
    for i in 0..mi {
        let gi: f64 = (0..d).map(|j| g[(i, j)] * z0[j]).sum();
        t0 = t0.max(gi - h[i] + 1.0);
    }
    for i in 0..me {
        let ai: f64 = (0..d).map(|j| a_eq[(i, j)] * z0[j]).sum();
        t0 = t0.max((ai - b_eq[i]).abs() + 1.0);
    }
    let mut start = DVector::zeros(d + 1);
    start.rows_mut(0, d).copy_from(&z0);
    start[d] = t0;

    let outcome = ipm::minimize(&problem, Some(&WarmStart { z: start }));
    if outcome.status != SolveStatus::Optimal {
        return Err(OcpError::IllConditioned("phase-1 did not converge"));
    }
    let violation = outcome.z[d].max(0.0);
    Ok((violation, outcome.z.rows(0, d).into_owned()))
}

/// Like [`phase1_feasible`] but also returns the violation-minimizing point,
/// for callers that need a witness (flat-objective stage 1).
pub(crate) fn min_violation_point(
    g: &DMatrix<f64>,
    h: &DVector<f64>,
    a_eq: &DMatrix<f64>,
    b_eq: &DVector<f64>,
    input_box: &InputBox,
) -> Result<(f64, DVector<f64>), OcpError> {
    min_violation(g, h, a_eq, b_eq, Some(input_box))
}

/// Feasibility of `{G z <= h, A z = b, z ∈ box}` decided by minimizing the
/// worst violation; feasible iff it is at most [`TAU_FEAS`].
pub fn phase1_feasible(
    g: &DMatrix<f64>,
    h: &DVector<f64>,
    a_eq: &DMatrix<f64>,
    b_eq: &DVector<f64>,
    input_box: &InputBox,
) -> Result<(bool, f64), OcpError> {
    if g.nrows() != h.len() || a_eq.nrows() != b_eq.len() {
        return Err(OcpError::DimensionMismatch("phase-1 rhs"));
    }
    let (violation, _) = min_violation(g, h, a_eq, b_eq, Some(input_box))?;
    Ok((violation <= TAU_FEAS, violation))
}

/// Solution of the epigraph program for a piecewise-affine terminal cost.
#[derive(Debug, Clone)]
pub struct EpigraphSolution {
    pub report: SolveReport,
    /// Stacked optimal inputs.
    pub inputs: DVector<f64>,
    /// Selector-projected terminal point reached by those inputs.
    pub terminal: Point2,
    /// Optimal bound `t`, i.e. the piecewise-affine cost at `terminal` up to
    /// the regularization-induced error.
    pub value: f64,
}

/// Minimizes `max(g0, max_r α_rᵀ E x_N + β_r)` over box-constrained input
/// sequences via the epigraph QP
/// `min ρ‖u‖² + t  s.t.  t >= α_rᵀ(E(Φx₀+Γu+ω)) + β_r, t >= g0, u ∈ box`
/// with `ρ =` [`RHO_EPIGRAPH`]. Always feasible.
pub fn solve_lp_epigraph(
    pieces: &[(Vector2<f64>, f64)],
    map: &CondensedMap,
    x0: &DVector<f64>,
    input_box: &InputBox,
    g0: f64,
) -> Result<EpigraphSolution, OcpError> {
    solve_lp_epigraph_constrained(pieces, map, x0, input_box, g0, RHO_EPIGRAPH, None)
}

/// [`solve_lp_epigraph`] with an explicit regularization weight, used to
/// verify the regularization-convergence property.
pub fn solve_lp_epigraph_with_rho(
    pieces: &[(Vector2<f64>, f64)],
    map: &CondensedMap,
    x0: &DVector<f64>,
    input_box: &InputBox,
    g0: f64,
    rho: f64,
) -> Result<EpigraphSolution, OcpError> {
    solve_lp_epigraph_constrained(pieces, map, x0, input_box, g0, rho, None)
}

/// Epigraph solve with optional extra equality rows `A u = b` on the stacked
/// inputs (terminal equalities of an instance). Feasibility of the equality
/// system is the caller's responsibility.
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_lp_epigraph_constrained(
    pieces: &[(Vector2<f64>, f64)],
    map: &CondensedMap,
    x0: &DVector<f64>,
    input_box: &InputBox,
    g0: f64,
    rho: f64,
    equalities: Option<(&DMatrix<f64>, &DVector<f64>)>,
) -> Result<EpigraphSolution, OcpError> {
    if pieces.is_empty() {
        return Err(OcpError::DimensionMismatch("no affine pieces"));
    }
    let nu = map.gamma.ncols();
    if input_box.dim() != map.input_dim {
        return Err(OcpError::DimensionMismatch("input box dim"));
    }
    let offset = map.projected_offset(x0);

    let rows = pieces.len() + 1 + 2 * nu;
    let mut g = DMatrix::zeros(rows, nu + 1);
    let mut h = DVector::zeros(rows);
    for (r, (alpha, beta)) in pieces.iter().enumerate() {
        // α·(E Γ u) − t <= −β − α·E(Φx₀+ω), scaled to unit row norm.
        let row = alpha.transpose() * &map.sel_gamma;
        let mut scale = 1.0_f64;
        for v in row.iter() {
            scale = scale.max(v.abs());
        }
        for j in 0..nu {
            g[(r, j)] = row[j] / scale;
        }
        g[(r, nu)] = -1.0 / scale;
        h[r] = (-beta - alpha.dot(&offset)) / scale;
    }
    let mut r = pieces.len();
    g[(r, nu)] = -1.0; // t >= g0
    h[r] = -g0;
    r += 1;
    for i in 0..nu {
        let chan = i % map.input_dim;
        g[(r, i)] = 1.0;
        h[r] = input_box.upper[chan];
        r += 1;
        g[(r, i)] = -1.0;
        h[r] = -input_box.lower[chan];
        r += 1;
    }

    let mut hess = DMatrix::zeros(nu + 1, nu + 1);
    for i in 0..nu {
        hess[(i, i)] = 2.0 * rho;
    }
    let mut lin = DVector::zeros(nu + 1);
    lin[nu] = 1.0;
    let (a_eq, b_eq) = match equalities {
        Some((a, b)) => {
            if a.ncols() != nu || a.nrows() != b.len() {
                return Err(OcpError::DimensionMismatch("epigraph equalities"));
            }
            let mut padded = DMatrix::zeros(a.nrows(), nu + 1);
            padded.view_mut((0, 0), (a.nrows(), nu)).copy_from(a);
            (padded, b.clone())
        }
        None => (DMatrix::zeros(0, nu + 1), DVector::zeros(0)),
    };
    let problem = QpProblem::new(hess, lin, g, h, a_eq, b_eq)?;

    // Strictly feasible start: box midpoint, t above the attained maximum.
    let mid = input_box.midpoint();
    let mut u0 = DVector::zeros(nu);
    for i in 0..nu {
        u0[i] = mid[i % map.input_dim];
    }
    let p0 = map.projected_terminal(x0, &u0);
    let mut t0 = g0;
    for (alpha, beta) in pieces {
        t0 = t0.max(alpha.dot(&p0) + beta);
    }
    let mut start = DVector::zeros(nu + 1);
    start.rows_mut(0, nu).copy_from(&u0);
    start[nu] = t0 + 1.0;

    let report = solve_prepared(&problem, Some(&WarmStart { z: start }))?;
    let inputs = report.z.rows(0, nu).into_owned();
    let value = report.z[nu];
    let terminal = map.projected_terminal(x0, &inputs);
    Ok(EpigraphSolution {
        report,
        inputs,
        terminal,
        value,
    })
}
