//! Solver correctness against enumeration, reachability, and grid oracles.

use blameless_core::dynamics::{
    condense_terminal, discretize_zoh, ContinuousAffineDynamics, InputBox, TerminalSelector,
};
use blameless_core::objective::generate_objective;
use blameless_core::ocp::{
    phase1_feasible, solve_lp_epigraph, solve_lp_epigraph_with_rho, solve_qp, SolveStatus, TAU_KKT,
};
use blameless_core::testkit::{self, active_set_enumeration, reachable_box_margin};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

#[test]
fn qp_matches_active_set_enumeration() {
    let mut rng = testkit::rng(9000);
    for case in 0..30 {
        let dim = rng.random_range(2..=6);
        let n_ineq = rng.random_range(0..=6);
        let n_eq = rng.random_range(0..dim.min(3));
        let p = testkit::random_feasible_qp(&mut rng, dim, n_ineq, n_eq);
        let report = solve_qp(&p).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal, "case {case}");
        assert!(report.residuals.max() <= TAU_KKT, "case {case}");
        let (oracle_value, _) = active_set_enumeration(&p).expect("feasible by construction");
        assert!(
            (report.objective - oracle_value).abs() <= 1e-6 * (1.0 + oracle_value.abs()),
            "case {case}: {} vs {oracle_value}",
            report.objective
        );
    }
}

#[test]
fn objective_value_invariant_under_row_permutation() {
    let mut rng = testkit::rng(9100);
    for _ in 0..10 {
        let p = testkit::random_feasible_qp(&mut rng, 4, 6, 0);
        let base = solve_qp(&p).unwrap();
        // Reverse the row order.
        let m = p.g_ineq.nrows();
        let mut g = DMatrix::zeros(m, p.dim());
        let mut h = DVector::zeros(m);
        for i in 0..m {
            for j in 0..p.dim() {
                g[(i, j)] = p.g_ineq[(m - 1 - i, j)];
            }
            h[i] = p.h_ineq[m - 1 - i];
        }
        let permuted = blameless_core::ocp::QpProblem::new(
            p.hess.clone(),
            p.lin.clone(),
            g,
            h,
            DMatrix::zeros(0, p.dim()),
            DVector::zeros(0),
        )
        .unwrap();
        let other = solve_qp(&permuted).unwrap();
        assert!((base.objective - other.objective).abs() <= 1e-9 * (1.0 + base.objective.abs()));
    }
}

fn lander_x_channel() -> (
    blameless_core::dynamics::DiscreteAffineDynamics,
    TerminalSelector,
    InputBox,
    DVector<f64>,
) {
    // Decoupled (v_x, p_x) double integrator with the lander's bounds.
    let cont = ContinuousAffineDynamics::new(
        DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]),
        DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        DVector::zeros(2),
        vec!["v_x".into(), "p_x".into()],
    )
    .unwrap();
    let dynamics = discretize_zoh(&cont, 0.2).unwrap();
    let selector = TerminalSelector::new([0, 1], 2).unwrap();
    let input_box = InputBox::new(
        DVector::from_column_slice(&[-10.0]),
        DVector::from_column_slice(&[10.0]),
    )
    .unwrap();
    let x0 = DVector::from_column_slice(&[-10.0, -130.0]);
    (dynamics, selector, input_box, x0)
}

#[test]
fn phase1_agrees_with_reachability_oracle_across_horizons() {
    let (dynamics, selector, input_box, x0) = lander_x_channel();
    let family = testkit::lander_family();
    let mut checked = 0;
    for horizon in (20..60).step_by(2) {
        let map = condense_terminal(&dynamics, horizon, &selector).unwrap();
        let nu = horizon;
        let stacked = InputBox::new(
            DVector::from_element(nu, -10.0),
            DVector::from_element(nu, 10.0),
        )
        .unwrap();
        for level in 1..=family.len() {
            let set = family.level(level);
            // Condense the terminal facets onto the stacked inputs.
            let offset = map.projected_offset(&x0);
            let rows = set.halfspaces().len();
            let mut g = DMatrix::zeros(rows, nu);
            let mut h = DVector::zeros(rows);
            for (r, hs) in set.halfspaces().iter().enumerate() {
                let row = hs.normal.transpose() * &map.sel_gamma;
                for j in 0..nu {
                    g[(r, j)] = row[j];
                }
                h[r] = hs.offset - hs.normal.dot(&offset);
            }
            let (feasible, violation) =
                phase1_feasible(&g, &h, &DMatrix::zeros(0, nu), &DVector::zeros(0), &stacked)
                    .unwrap();
            let margin = reachable_box_margin(&dynamics, &x0, &input_box, horizon, &selector, set);
            assert_eq!(
                feasible,
                margin >= 0.0,
                "N={horizon} level={level}: phase-1 violation {violation:.3e}, \
                 oracle margin {margin:.3e}"
            );
            checked += 1;
        }
    }
    assert_eq!(checked, 100);
}

#[test]
fn epigraph_value_matches_ramp_grid_oracle() {
    let scenario = testkit::lander();
    let objective = generate_objective(&scenario.family, 0.0, 1.0).unwrap();
    let map = condense_terminal(
        &scenario.instance.dynamics,
        scenario.instance.horizon,
        &scenario.instance.selector,
    )
    .unwrap();
    let pieces: Vec<_> = objective
        .pieces()
        .iter()
        .map(|p| (p.alpha, p.beta))
        .collect();
    let sol = solve_lp_epigraph(
        &pieces,
        &map,
        &scenario.instance.x0,
        &scenario.instance.input_box,
        objective.base_value(),
    )
    .unwrap();

    // Brute-force grid over a constant-plus-ramp two-parameter x-thrust
    // family (the y-channel cannot affect the (v_x, p_x) objective).
    let n = scenario.instance.horizon;
    let mut grid_min = f64::INFINITY;
    for ai in 0..200 {
        let a = -10.0 + 20.0 * ai as f64 / 199.0;
        for bi in 0..200 {
            let b = -20.0 + 40.0 * bi as f64 / 199.0;
            let mut stacked = DVector::zeros(2 * n);
            for k in 0..n {
                let ramp = a + b * (k as f64 / (n - 1) as f64 - 0.5);
                stacked[2 * k] = ramp.clamp(-10.0, 10.0);
                stacked[2 * k + 1] = 9.0;
            }
            let terminal = map.projected_terminal(&scenario.instance.x0, &stacked);
            grid_min = grid_min.min(objective.evaluate(terminal));
        }
    }
    // The LP can only do better than the restricted family, and the family
    // reaches the flat bottom of the objective, so the gap is small.
    assert!(grid_min >= sol.value - 1e-6, "{grid_min} vs {}", sol.value);
    assert!(grid_min <= sol.value + 1e-2, "{grid_min} vs {}", sol.value);
}

#[test]
fn epigraph_value_converges_as_regularization_halves() {
    let scenario = testkit::lander();
    let objective = generate_objective(&scenario.family, 0.0, 1.0).unwrap();
    let map = condense_terminal(
        &scenario.instance.dynamics,
        scenario.instance.horizon,
        &scenario.instance.selector,
    )
    .unwrap();
    let pieces: Vec<_> = objective
        .pieces()
        .iter()
        .map(|p| (p.alpha, p.beta))
        .collect();
    let rho = 1e-8;
    let full = solve_lp_epigraph_with_rho(
        &pieces,
        &map,
        &scenario.instance.x0,
        &scenario.instance.input_box,
        objective.base_value(),
        rho,
    )
    .unwrap();
    let half = solve_lp_epigraph_with_rho(
        &pieces,
        &map,
        &scenario.instance.x0,
        &scenario.instance.input_box,
        objective.base_value(),
        rho / 2.0,
    )
    .unwrap();
    let bound = 10.0 * rho * full.inputs.norm_squared();
    assert!(
        (full.value - half.value).abs() <= bound.max(1e-9),
        "{} vs {} (bound {bound:.3e})",
        full.value,
        half.value
    );
}
