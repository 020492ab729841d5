//! Command implementations: each writes deterministic artifacts into the
//! output directory and reports failures through exit-code classes.

use crate::artifacts::{
    fmt_f64, objective_grid_csv, objective_json, read_trajectory_csv, solution_json, successor_csv,
    trajectory_csv, write_json, write_string, ReportJson,
};
use crate::config::{ReferenceOutcomes, Scenario};
use crate::error::CliError;
use blameless_core::blameless::{
    brute_force_solve, classify_blameworthiness, pure_optimal_solve, stage1_select,
    two_stage_solve, BlamelessSolution, Blameworthiness,
};
use blameless_core::dynamics::sample_successor;
use blameless_core::objective::{generate_objective, PiecewiseAffineObjective, ValidationReport};
use blameless_core::ocp::{TAU_FEAS, TAU_KKT};
use serde::Serialize;
use std::path::Path;

fn build_objective(scenario: &Scenario) -> Result<PiecewiseAffineObjective, CliError> {
    Ok(generate_objective(
        &scenario.family,
        scenario.g0,
        scenario.g1,
    )?)
}

pub fn gen_objective(scenario: &Scenario, out: &Path) -> Result<(), CliError> {
    let objective = build_objective(scenario)?;
    write_json(&out.join("objective.json"), &objective_json(&objective))?;
    write_string(
        &out.join("objective_grid.csv"),
        &objective_grid_csv(&objective),
    )?;
    let report = objective.validate(10_000, scenario.seed);
    write_json(&out.join("objective_validation.json"), &report)?;
    println!(
        "objective: {} pieces, levels {:?}",
        objective.pieces().len(),
        objective.level_values()
    );
    if !report.pass {
        return Err(CliError::validation(format!(
            "objective validation failed: {report:?}"
        )));
    }
    Ok(())
}

fn write_solution(
    scenario: &Scenario,
    solution: &BlamelessSolution,
    out: &Path,
    json_name: &str,
    csv_name: &str,
) -> Result<(), CliError> {
    let csv = trajectory_csv(&solution.trajectory, scenario);
    write_string(&out.join(csv_name), &csv)?;
    write_json(&out.join(json_name), &solution_json(solution, csv_name))?;
    Ok(())
}

pub fn solve(scenario: &Scenario, out: &Path) -> Result<(), CliError> {
    let objective = build_objective(scenario)?;
    let solution = two_stage_solve(&scenario.instance, &scenario.family, &objective)?;
    write_solution(scenario, &solution, out, "solution.json", "trajectory.csv")?;
    println!(
        "two-stage: level {:?}, mission cost {}",
        solution.i_star,
        fmt_f64(solution.mission_cost)
    );
    Ok(())
}

pub fn brute(scenario: &Scenario, out: &Path) -> Result<(), CliError> {
    let solution = brute_force_solve(&scenario.instance, &scenario.family)?;
    write_solution(
        scenario,
        &solution,
        out,
        "brute_solution.json",
        "brute_trajectory.csv",
    )?;
    println!(
        "brute force: level {:?} after {} subproblems, mission cost {}",
        solution.i_star,
        solution.subproblem_count,
        fmt_f64(solution.mission_cost)
    );
    Ok(())
}

pub fn successor(scenario: &Scenario, out: &Path) -> Result<(), CliError> {
    let cloud = sample_successor(
        &scenario.instance.dynamics,
        &scenario.instance.x0,
        &scenario.instance.input_box,
        scenario.instance.horizon,
        &scenario.instance.selector,
        scenario.sample_count,
        scenario.seed,
    )?;
    write_string(&out.join("successor.csv"), &successor_csv(&cloud, scenario))?;
    println!("successor cloud: {} samples", cloud.len());
    Ok(())
}

#[derive(Serialize)]
struct AgreementJson {
    same_level: bool,
    cost_rel_diff: f64,
    trajectory_max_diff: f64,
}

#[derive(Serialize)]
struct PureOptimalJson {
    q: Vec<Vec<f64>>,
    mission_cost: f64,
    terminal: [f64; 2],
    /// Smallest level containing the terminal point, if any.
    overall_level: Option<usize>,
    /// Smallest level containing each selector coordinate separately.
    coord_levels: [Option<usize>; 2],
    verdict: Blameworthiness,
    subproblems: usize,
    report: ReportJson,
}

#[derive(Serialize)]
struct CompareJson {
    two_stage: crate::artifacts::SolutionJson,
    brute: crate::artifacts::SolutionJson,
    agreement: AgreementJson,
    pure_optimal: Vec<PureOptimalJson>,
    reference: Option<ReferenceOutcomes>,
}

/// Smallest level whose projection onto `axis` contains the coordinate.
fn coordinate_level(scenario: &Scenario, axis: usize, value: f64) -> Option<usize> {
    for (i, set) in scenario.family.sets().iter().enumerate() {
        let (lo, hi) = set.coordinate_interval(axis);
        if value >= lo - TAU_FEAS && value <= hi + TAU_FEAS {
            return Some(i + 1);
        }
    }
    None
}

pub fn compare(scenario: &Scenario, out: &Path) -> Result<(), CliError> {
    let objective = build_objective(scenario)?;
    let two = two_stage_solve(&scenario.instance, &scenario.family, &objective)?;
    let brute_sol = brute_force_solve(&scenario.instance, &scenario.family)?;

    let two_csv = trajectory_csv(&two.trajectory, scenario);
    write_string(&out.join("two_stage_trajectory.csv"), &two_csv)?;
    let brute_csv = trajectory_csv(&brute_sol.trajectory, scenario);
    write_string(&out.join("brute_trajectory.csv"), &brute_csv)?;

    let mut traj_diff = 0.0_f64;
    for (a, b) in two
        .trajectory
        .states
        .iter()
        .zip(&brute_sol.trajectory.states)
    {
        traj_diff = traj_diff.max((a - b).amax());
    }
    let agreement = AgreementJson {
        same_level: two.i_star == brute_sol.i_star,
        cost_rel_diff: (two.mission_cost - brute_sol.mission_cost).abs()
            / (1.0 + brute_sol.mission_cost.abs()),
        trajectory_max_diff: traj_diff,
    };

    let mut pure_runs = Vec::new();
    for (qi, q) in scenario.compare_q.iter().enumerate() {
        let mut instance = scenario.instance.clone();
        instance.weights.q = *q;
        instance.weights.center = scenario.family.innermost().vertex_centroid();
        let (traj, report, terminal, cost) = pure_optimal_solve(&instance)?;
        let csv = trajectory_csv(&traj, scenario);
        write_string(&out.join(format!("pure_optimal_{qi}_trajectory.csv")), &csv)?;
        let class = classify_blameworthiness(&traj.inputs, &instance, &scenario.family)?;
        pure_runs.push(PureOptimalJson {
            q: vec![vec![q[(0, 0)], q[(0, 1)]], vec![q[(1, 0)], q[(1, 1)]]],
            mission_cost: cost,
            terminal: [terminal.x, terminal.y],
            overall_level: class.achieved_level,
            coord_levels: [
                coordinate_level(scenario, 0, terminal.x),
                coordinate_level(scenario, 1, terminal.y),
            ],
            verdict: class.verdict,
            subproblems: 1,
            report: ReportJson::from(&report),
        });
    }

    let compare = CompareJson {
        two_stage: solution_json(&two, "two_stage_trajectory.csv"),
        brute: solution_json(&brute_sol, "brute_trajectory.csv"),
        agreement,
        pure_optimal: pure_runs,
        reference: scenario.reference.clone(),
    };
    write_json(&out.join("compare.json"), &compare)?;
    println!(
        "compare: two-stage level {:?} ({} subproblems) vs brute level {:?} ({} subproblems)",
        two.i_star, two.subproblem_count, brute_sol.i_star, brute_sol.subproblem_count
    );
    Ok(())
}

#[derive(Serialize)]
struct CheckJson {
    name: &'static str,
    pass: bool,
    detail: String,
}

#[derive(Serialize)]
struct ValidationJson {
    checks: Vec<CheckJson>,
    pass: bool,
}

pub fn validate(scenario: &Scenario, out: &Path) -> Result<(), CliError> {
    let mut checks: Vec<CheckJson> = Vec::new();
    let mut push = |name: &'static str, pass: bool, detail: String| {
        println!("{} {name}: {detail}", if pass { "ok" } else { "FAIL" });
        checks.push(CheckJson { name, pass, detail });
    };

    let objective = build_objective(scenario)?;
    let report: ValidationReport = objective.validate(10_000, scenario.seed);
    push(
        "objective-level-sets",
        report.pass,
        format!(
            "vertex error {:.3e}, {} monotonicity / {} convexity violations",
            report.vertex_max_error, report.monotonicity_violations, report.convexity_violations
        ),
    );

    let two = two_stage_solve(&scenario.instance, &scenario.family, &objective)?;
    let brute_sol = brute_force_solve(&scenario.instance, &scenario.family)?;
    let mut traj_diff = 0.0_f64;
    for (a, b) in two
        .trajectory
        .states
        .iter()
        .zip(&brute_sol.trajectory.states)
    {
        traj_diff = traj_diff.max((a - b).amax());
    }
    let cost_rel =
        (two.mission_cost - brute_sol.mission_cost).abs() / (1.0 + brute_sol.mission_cost.abs());
    push(
        "two-stage-vs-brute",
        two.i_star == brute_sol.i_star && cost_rel <= 1e-6 && traj_diff <= 1e-6,
        format!(
            "levels {:?}/{:?}, cost diff {cost_rel:.3e}, trajectory diff {traj_diff:.3e}",
            two.i_star, brute_sol.i_star
        ),
    );

    push(
        "subproblem-counts",
        two.subproblem_count == 2
            && brute_sol.subproblem_count == brute_sol.i_star.unwrap_or(usize::MAX),
        format!(
            "two-stage {} vs brute {}",
            two.subproblem_count, brute_sol.subproblem_count
        ),
    );

    let worst_kkt = two
        .reports
        .iter()
        .chain(&brute_sol.reports)
        .map(|r| r.residuals.max())
        .fold(0.0_f64, f64::max);
    push(
        "kkt-residuals",
        worst_kkt <= TAU_KKT,
        format!("worst {worst_kkt:.3e}"),
    );

    let traj_ok = two
        .trajectory
        .validate(&scenario.instance.dynamics, &scenario.instance.input_box)
        .is_ok()
        && brute_sol
            .trajectory
            .validate(&scenario.instance.dynamics, &scenario.instance.input_box)
            .is_ok();
    push(
        "trajectory-invariants",
        traj_ok,
        "rollout recurrence and input box".into(),
    );

    let stage1 = stage1_select(&scenario.instance, &objective)?;
    push(
        "stage1-terminal-membership",
        scenario
            .family
            .level(stage1.level)
            .contains(stage1.terminal, TAU_FEAS),
        format!("level {} terminal {:?}", stage1.level, stage1.terminal),
    );

    let cloud = sample_successor(
        &scenario.instance.dynamics,
        &scenario.instance.x0,
        &scenario.instance.input_box,
        scenario.instance.horizon,
        &scenario.instance.selector,
        scenario.sample_count,
        scenario.seed,
    )?;
    let mut min_margin = f64::INFINITY;
    for p in &cloud {
        min_margin = min_margin.min(objective.evaluate(*p) - stage1.value);
    }
    push(
        "successor-optimality",
        min_margin >= -1e-6,
        format!("worst margin {min_margin:.3e} over {} samples", cloud.len()),
    );

    let class =
        classify_blameworthiness(&two.trajectory.inputs, &scenario.instance, &scenario.family)?;
    push(
        "two-stage-blameless",
        class.verdict == Blameworthiness::Blameless,
        format!(
            "achieved {:?}, oracle {:?}",
            class.achieved_level, class.oracle_level
        ),
    );

    let pass = checks.iter().all(|c| c.pass);
    write_json(
        &out.join("validation.json"),
        &ValidationJson { checks, pass },
    )?;
    if pass {
        Ok(())
    } else {
        Err(CliError::validation("one or more invariant checks failed"))
    }
}

/// Round-trips a written trajectory CSV and re-validates it; used by the test
/// suites to pin the artifact contract.
pub fn reload_and_validate_trajectory(scenario: &Scenario, path: &Path) -> Result<(), CliError> {
    let traj = read_trajectory_csv(path, scenario)?;
    traj.validate(&scenario.instance.dynamics, &scenario.instance.input_box)
        .map_err(|e| CliError::validation(format!("reloaded trajectory: {e}")))?;
    Ok(())
}
