//! Scenario configuration: JSON schema, validation, and assembly of the core
//! problem objects.

use crate::error::CliError;
use blameless_core::blameless::{CostWeights, OcpInstance, TerminalEquality};
use blameless_core::dynamics::{
    discretize_zoh, ContinuousAffineDynamics, InputBox, TerminalSelector,
};
use blameless_core::geometry::{NestedFamily, Polytope2};
use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};
use std::path::Path;

fn default_dt() -> f64 {
    0.2
}
fn default_horizon() -> usize {
    60
}
fn default_g0() -> f64 {
    0.0
}
fn default_g1() -> f64 {
    1.0
}
fn default_sample_count() -> usize {
    10_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    #[serde(default)]
    pub state_labels: Vec<String>,
    #[serde(default)]
    pub input_labels: Vec<String>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputBoxConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Safety sets: either pre-nested (innermost first) or priority-ordered raw
/// sets to intersect (most important first).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetsConfig {
    #[serde(default)]
    pub nested: Option<Vec<Polytope2>>,
    #[serde(default)]
    pub prioritized: Option<Vec<Polytope2>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub r: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    /// Terminal weights for the pure-optimal comparison runs.
    #[serde(default)]
    pub compare_q: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    #[serde(default = "default_g0")]
    pub g0: f64,
    #[serde(default = "default_g1")]
    pub g1: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self { g0: 0.0, g1: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(default = "default_sample_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            count: default_sample_count(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalEqualityConfig {
    pub row: Vec<f64>,
    pub value: f64,
}

/// Externally reported outcomes to print next to computed ones in `compare`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceOutcomes {
    #[serde(default)]
    pub blameless_level: Option<usize>,
    /// One entry per compare_q matrix; levels in selector-coordinate order.
    #[serde(default)]
    pub pure_optimal: Vec<ReferencePureOptimal>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferencePureOptimal {
    pub coord_levels: Vec<Option<usize>>,
    pub overall_level: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub dynamics: DynamicsConfig,
    pub x0: Vec<f64>,
    pub input_box: InputBoxConfig,
    /// State indices of the two safety-constrained terminal coordinates.
    pub selector: [usize; 2],
    pub sets: SetsConfig,
    pub weights: WeightsConfig,
    #[serde(default)]
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub terminal_equalities: Vec<TerminalEqualityConfig>,
    #[serde(default)]
    pub reference: Option<ReferenceOutcomes>,
}

/// Loads and schema-validates a scenario configuration.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let config: ScenarioConfig = serde_json::from_str(&text).map_err(|e| {
        CliError::validation(format!(
            "parse error in {} at line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    Ok(config)
}

/// Command-line overrides applied on top of the configuration.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub horizon: Option<usize>,
}

/// A fully-assembled scenario ready to solve.
pub struct Scenario {
    pub instance: OcpInstance,
    pub family: NestedFamily,
    pub g0: f64,
    pub g1: f64,
    pub sample_count: usize,
    pub seed: u64,
    pub compare_q: Vec<Matrix2<f64>>,
    pub state_labels: Vec<String>,
    pub input_labels: Vec<String>,
    pub reference: Option<ReferenceOutcomes>,
}

impl Scenario {
    /// Labels of the two selector coordinates, in selector order.
    pub fn selector_labels(&self) -> [String; 2] {
        let rows = self.instance.selector.rows();
        [
            self.state_labels[rows[0]].clone(),
            self.state_labels[rows[1]].clone(),
        ]
    }
}

fn matrix_from(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, CliError> {
    if rows.is_empty() {
        return Err(CliError::validation(format!("{what}: empty matrix")));
    }
    let cols = rows[0].len();
    if cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::validation(format!("{what}: ragged matrix")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(CliError::validation(format!("{what}: non-finite entry")));
    }
    Ok(DMatrix::from_row_slice(rows.len(), cols, &flat))
}

fn matrix2_from(rows: &[Vec<f64>], what: &str) -> Result<Matrix2<f64>, CliError> {
    let m = matrix_from(rows, what)?;
    if m.nrows() != 2 || m.ncols() != 2 {
        return Err(CliError::validation(format!("{what}: expected 2x2")));
    }
    Ok(Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]))
}

/// Builds the core problem objects, applying defaults and overrides and
/// naming the first violated invariant on failure.
pub fn build_scenario(config: &ScenarioConfig, overrides: Overrides) -> Result<Scenario, CliError> {
    let dt = overrides.dt.unwrap_or(config.dynamics.dt);
    let horizon = overrides.horizon.unwrap_or(config.dynamics.horizon);
    let seed = overrides.seed.unwrap_or(config.sampling.seed);
    if !(dt.is_finite() && dt > 0.0) {
        return Err(CliError::validation("dt must be positive"));
    }
    if horizon == 0 {
        return Err(CliError::validation("horizon must be at least 1"));
    }

    let a = matrix_from(&config.dynamics.a, "dynamics.a")?;
    let b = matrix_from(&config.dynamics.b, "dynamics.b")?;
    let n = a.nrows();
    let l = b.ncols();
    let c = DVector::from_column_slice(&config.dynamics.c);
    let state_labels = if config.dynamics.state_labels.is_empty() {
        (0..n).map(|i| format!("x{i}")).collect()
    } else if config.dynamics.state_labels.len() == n {
        config.dynamics.state_labels.clone()
    } else {
        return Err(CliError::validation("state_labels length"));
    };
    let input_labels = if config.dynamics.input_labels.is_empty() {
        (0..l).map(|i| format!("u{i}")).collect()
    } else if config.dynamics.input_labels.len() == l {
        config.dynamics.input_labels.clone()
    } else {
        return Err(CliError::validation("input_labels length"));
    };
    let continuous = ContinuousAffineDynamics::new(a, b, c, state_labels.clone())
        .map_err(|e| CliError::validation(format!("dynamics: {e}")))?;
    let dynamics =
        discretize_zoh(&continuous, dt).map_err(|e| CliError::validation(format!("dt: {e}")))?;

    if config.x0.len() != n {
        return Err(CliError::validation("x0 dimension"));
    }
    let x0 = DVector::from_column_slice(&config.x0);

    let input_box = InputBox::new(
        DVector::from_column_slice(&config.input_box.lower),
        DVector::from_column_slice(&config.input_box.upper),
    )
    .map_err(|e| CliError::validation(format!("input box: {e}")))?;
    if input_box.dim() != l {
        return Err(CliError::validation("input box dimension"));
    }

    let selector = TerminalSelector::new(config.selector, n)
        .map_err(|e| CliError::validation(format!("selector: {e}")))?;

    let family = match (&config.sets.nested, &config.sets.prioritized) {
        (Some(nested), None) => NestedFamily::from_nested(nested.clone())
            .map_err(|e| CliError::validation(format!("sets.nested: {e}")))?,
        (None, Some(prioritized)) => NestedFamily::from_prioritized(prioritized)
            .map_err(|e| CliError::validation(format!("sets.prioritized: {e}")))?,
        _ => {
            return Err(CliError::validation(
                "sets: exactly one of `nested` or `prioritized` is required",
            ))
        }
    };

    let r = matrix_from(&config.weights.r, "weights.r")?;
    if r.nrows() != l {
        return Err(CliError::validation("weights.r dimension"));
    }
    let q = matrix2_from(&config.weights.q, "weights.q")?;
    let weights = CostWeights::new(r, q, family.innermost().vertex_centroid())
        .map_err(|e| CliError::validation(format!("weights: {e}")))?;
    let mut compare_q = Vec::new();
    for (i, rows) in config.weights.compare_q.iter().enumerate() {
        compare_q.push(matrix2_from(rows, &format!("weights.compare_q[{i}]"))?);
    }

    let mut terminal_equalities = Vec::new();
    for (i, eq) in config.terminal_equalities.iter().enumerate() {
        if eq.row.len() != n {
            return Err(CliError::validation(format!(
                "terminal_equalities[{i}].row dimension"
            )));
        }
        if !eq.value.is_finite() {
            return Err(CliError::validation(format!(
                "terminal_equalities[{i}].value"
            )));
        }
        terminal_equalities.push(TerminalEquality {
            row: DVector::from_column_slice(&eq.row),
            value: eq.value,
        });
    }

    if config.objective.g1 <= config.objective.g0 {
        return Err(CliError::validation("objective: g1 must exceed g0"));
    }
    if let Some(reference) = &config.reference {
        if reference.pure_optimal.len() > compare_q.len() {
            return Err(CliError::validation(
                "reference.pure_optimal has more entries than weights.compare_q",
            ));
        }
    }

    Ok(Scenario {
        instance: OcpInstance {
            dynamics,
            x0,
            horizon,
            input_box,
            selector,
            weights,
            terminal_equalities,
        },
        family,
        g0: config.objective.g0,
        g1: config.objective.g1,
        sample_count: config.sampling.count,
        seed,
        compare_q,
        state_labels,
        input_labels,
        reference: config.reference.clone(),
    })
}
