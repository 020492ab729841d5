//! Deterministic CSV/JSON artifact emission and reloading.
//!
//! Floats in CSV artifacts carry 17 significant digits ('.' decimal, '\n'
//! line endings), which round-trips f64 losslessly and keeps reruns
//! byte-identical.

use crate::config::Scenario;
use crate::error::CliError;
use blameless_core::dynamics::Trajectory;
use blameless_core::geometry::Point2;
use blameless_core::objective::PiecewiseAffineObjective;
use blameless_core::ocp::SolveReport;
use nalgebra::DVector;
use serde::Serialize;
use std::path::Path;

/// 17-significant-digit scientific form, lossless for f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_string(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, content)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::validation(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_string(path, &text)
}

/// Trajectory CSV: header `t,<states...>,<inputs...>`; one row per time step,
/// with the input cells empty on the terminal row.
pub fn trajectory_csv(traj: &Trajectory, scenario: &Scenario) -> String {
    let mut out = String::new();
    out.push('t');
    for label in &scenario.state_labels {
        out.push(',');
        out.push_str(label);
    }
    for label in &scenario.input_labels {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for (k, state) in traj.states.iter().enumerate() {
        out.push_str(&fmt_f64(k as f64 * traj.dt));
        for v in state.iter() {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        for i in 0..scenario.input_labels.len() {
            out.push(',');
            if let Some(u) = traj.inputs.get(k) {
                out.push_str(&fmt_f64(u[i]));
            }
        }
        out.push('\n');
    }
    out
}

/// Reloads a trajectory CSV produced by [`trajectory_csv`].
pub fn read_trajectory_csv(path: &Path, scenario: &Scenario) -> Result<Trajectory, CliError> {
    let text = std::fs::read_to_string(path)?;
    let n = scenario.state_labels.len();
    let l = scenario.input_labels.len();
    let mut states = Vec::new();
    let mut inputs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 1 + n + l {
            return Err(CliError::validation(format!(
                "trajectory csv line {lineno}: expected {} cells",
                1 + n + l
            )));
        }
        let parse = |s: &str| -> Result<f64, CliError> {
            s.parse()
                .map_err(|e| CliError::validation(format!("trajectory csv line {lineno}: {e}")))
        };
        let mut state = DVector::zeros(n);
        for i in 0..n {
            state[i] = parse(cells[1 + i])?;
        }
        states.push(state);
        if !cells[1 + n].is_empty() {
            let mut input = DVector::zeros(l);
            for i in 0..l {
                input[i] = parse(cells[1 + n + i])?;
            }
            inputs.push(input);
        }
    }
    Ok(Trajectory {
        states,
        inputs,
        dt: scenario.instance.dynamics.dt,
    })
}

/// Successor cloud CSV with selector-coordinate headers (`<label>_N`).
pub fn successor_csv(points: &[Point2], scenario: &Scenario) -> String {
    let [l0, l1] = scenario.selector_labels();
    let mut out = format!("{l0}_N,{l1}_N\n");
    for p in points {
        out.push_str(&fmt_f64(p.x));
        out.push(',');
        out.push_str(&fmt_f64(p.y));
        out.push('\n');
    }
    out
}

/// Grid-sampled objective CSV (`x,y,g`) over the outermost set's bounding box
/// inflated by 10%, 201 samples per axis.
pub fn objective_grid_csv(objective: &PiecewiseAffineObjective) -> String {
    let (lo, hi) = objective.family().outermost().bounding_box();
    let span = hi - lo;
    let lo = lo - span * 0.1;
    let hi = hi + span * 0.1;
    let steps = 200usize;
    let mut out = String::from("x,y,g\n");
    for i in 0..=steps {
        let x = lo.x + (hi.x - lo.x) * i as f64 / steps as f64;
        for j in 0..=steps {
            let y = lo.y + (hi.y - lo.y) * j as f64 / steps as f64;
            let g = objective.evaluate(Point2::new(x, y));
            out.push_str(&fmt_f64(x));
            out.push(',');
            out.push_str(&fmt_f64(y));
            out.push(',');
            out.push_str(&fmt_f64(g));
            out.push('\n');
        }
    }
    out
}

/// JSON form of the synthesized objective.
#[derive(Serialize)]
pub struct ObjectiveJson {
    pub g_levels: Vec<f64>,
    pub pieces: Vec<PieceJson>,
    pub base: blameless_core::geometry::Polytope2,
}

#[derive(Serialize)]
pub struct PieceJson {
    pub alpha: [f64; 2],
    pub beta: f64,
}

pub fn objective_json(objective: &PiecewiseAffineObjective) -> ObjectiveJson {
    ObjectiveJson {
        g_levels: objective.level_values().to_vec(),
        pieces: objective
            .pieces()
            .iter()
            .map(|p| PieceJson {
                alpha: [p.alpha.x, p.alpha.y],
                beta: p.beta,
            })
            .collect(),
        base: objective.base_region().clone(),
    }
}

/// JSON-friendly solver diagnostics.
#[derive(Serialize)]
pub struct ReportJson {
    pub status: blameless_core::ocp::SolveStatus,
    pub iterations: usize,
    pub kkt: blameless_core::ocp::KktResiduals,
    pub objective: f64,
}

impl From<&SolveReport> for ReportJson {
    fn from(r: &SolveReport) -> Self {
        Self {
            status: r.status,
            iterations: r.iterations,
            kkt: r.residuals,
            objective: r.objective,
        }
    }
}

/// JSON form of a blameless solve outcome.
#[derive(Serialize)]
pub struct SolutionJson {
    pub i_star: Option<usize>,
    pub stage1_value: Option<f64>,
    pub mission_cost: f64,
    pub subproblems: usize,
    pub terminal: [f64; 2],
    pub stage1_threshold_ok: Option<bool>,
    pub trajectory_csv: String,
    pub reports: Vec<ReportJson>,
}

pub fn solution_json(
    sol: &blameless_core::blameless::BlamelessSolution,
    trajectory_csv: &str,
) -> SolutionJson {
    SolutionJson {
        i_star: sol.i_star,
        stage1_value: sol.stage1_value,
        mission_cost: sol.mission_cost,
        subproblems: sol.subproblem_count,
        terminal: [sol.terminal.x, sol.terminal.y],
        stage1_threshold_ok: sol.stage1_threshold_ok,
        trajectory_csv: trajectory_csv.to_string(),
        reports: sol.reports.iter().map(ReportJson::from).collect(),
    }
}
