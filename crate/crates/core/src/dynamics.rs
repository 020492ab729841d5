//! Affine discrete-time dynamics: exact zero-order-hold discretization,
//! trajectory rollout, condensing to a terminal-state affine map, and seeded
//! Monte Carlo successor-set sampling.

use crate::geometry::Point2;
use crate::rng::unit_f64;
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, thiserror::Error)]
pub enum DynamicsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
    #[error("time step must be positive")]
    InvalidTimeStep,
    #[error("input box has lower > upper in component {0}")]
    InvalidBox(usize),
    #[error("selector row {0} out of range or repeated")]
    InvalidSelector(usize),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
}

/// Continuous-time affine dynamics `ẋ = A x + B u + c`.
#[derive(Debug, Clone)]
pub struct ContinuousAffineDynamics {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DVector<f64>,
    pub state_labels: Vec<String>,
}

impl ContinuousAffineDynamics {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DVector<f64>,
        state_labels: Vec<String>,
    ) -> Result<Self, DynamicsError> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.len() != n {
            return Err(DynamicsError::DimensionMismatch("continuous dynamics"));
        }
        if !(a.iter().all(|v| v.is_finite())
            && b.iter().all(|v| v.is_finite())
            && c.iter().all(|v| v.is_finite()))
        {
            return Err(DynamicsError::NonFinite("continuous dynamics"));
        }
        Ok(Self {
            a,
            b,
            c,
            state_labels,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
}

/// Discrete-time affine dynamics `x_{k+1} = A x_k + B u_k + c`.
#[derive(Debug, Clone)]
pub struct DiscreteAffineDynamics {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DVector<f64>,
    pub dt: f64,
}

impl DiscreteAffineDynamics {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DVector<f64>,
        dt: f64,
    ) -> Result<Self, DynamicsError> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.len() != n {
            return Err(DynamicsError::DimensionMismatch("discrete dynamics"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(DynamicsError::InvalidTimeStep);
        }
        Ok(Self { a, b, c, dt })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u + &self.c
    }
}

/// Componentwise input bounds `lower <= u <= upper`.
#[derive(Debug, Clone)]
pub struct InputBox {
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl InputBox {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self, DynamicsError> {
        if lower.len() != upper.len() {
            return Err(DynamicsError::DimensionMismatch("input box"));
        }
        for i in 0..lower.len() {
            if !(lower[i].is_finite() && upper[i].is_finite()) {
                return Err(DynamicsError::NonFinite("input box"));
            }
            if lower[i] > upper[i] {
                return Err(DynamicsError::InvalidBox(i));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn midpoint(&self) -> DVector<f64> {
        (&self.lower + &self.upper) * 0.5
    }

    pub fn contains(&self, u: &DVector<f64>, tol: f64) -> bool {
        (0..self.dim()).all(|i| u[i] >= self.lower[i] - tol && u[i] <= self.upper[i] + tol)
    }
}

/// Selection matrix `E` extracting the two safety-constrained coordinates.
#[derive(Debug, Clone)]
pub struct TerminalSelector {
    rows: [usize; 2],
    state_dim: usize,
}

impl TerminalSelector {
    pub fn new(rows: [usize; 2], state_dim: usize) -> Result<Self, DynamicsError> {
        if rows[0] == rows[1] {
            return Err(DynamicsError::InvalidSelector(rows[1]));
        }
        for &r in &rows {
            if r >= state_dim {
                return Err(DynamicsError::InvalidSelector(r));
            }
        }
        Ok(Self { rows, state_dim })
    }

    pub fn rows(&self) -> [usize; 2] {
        self.rows
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// Dense `2 × n` matrix of unit basis rows.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut e = DMatrix::zeros(2, self.state_dim);
        e[(0, self.rows[0])] = 1.0;
        e[(1, self.rows[1])] = 1.0;
        e
    }

    pub fn apply(&self, x: &DVector<f64>) -> Point2 {
        Point2::new(x[self.rows[0]], x[self.rows[1]])
    }
}

/// State/input sequences consistent with some discrete dynamics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub dt: f64,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.inputs.len()
    }

    pub fn terminal(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory has a state")
    }

    /// Checks the rollout recurrence (within 1e-8) and the input box
    /// (within 1e-8). Used both after solves and when reloading artifacts.
    pub fn validate(
        &self,
        dynamics: &DiscreteAffineDynamics,
        input_box: &InputBox,
    ) -> Result<(), DynamicsError> {
        if self.states.len() != self.inputs.len() + 1 {
            return Err(DynamicsError::DimensionMismatch("trajectory lengths"));
        }
        for (k, u) in self.inputs.iter().enumerate() {
            if !input_box.contains(u, 1e-8) {
                return Err(DynamicsError::InvalidBox(k));
            }
            let predicted = dynamics.step(&self.states[k], u);
            let residual = (&self.states[k + 1] - predicted).amax();
            if residual > 1e-8 {
                return Err(DynamicsError::DimensionMismatch("rollout recurrence"));
            }
        }
        Ok(())
    }
}

/// Affine map `x_N = phi x_0 + gamma vec(u) + omega`, with the selector-reduced
/// blocks cached for terminal-constraint work.
#[derive(Debug, Clone)]
pub struct CondensedMap {
    pub phi: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub omega: DVector<f64>,
    pub sel_phi: DMatrix<f64>,
    pub sel_gamma: DMatrix<f64>,
    pub sel_omega: DVector<f64>,
    pub horizon: usize,
    pub input_dim: usize,
}

impl CondensedMap {
    pub fn terminal(&self, x0: &DVector<f64>, stacked_inputs: &DVector<f64>) -> DVector<f64> {
        &self.phi * x0 + &self.gamma * stacked_inputs + &self.omega
    }

    /// Selector-projected terminal point.
    pub fn projected_terminal(&self, x0: &DVector<f64>, stacked_inputs: &DVector<f64>) -> Point2 {
        let p = &self.sel_phi * x0 + &self.sel_gamma * stacked_inputs + &self.sel_omega;
        Point2::new(p[0], p[1])
    }

    /// Selector-projected affine offset `E(phi x0 + omega)` for a fixed `x0`.
    pub fn projected_offset(&self, x0: &DVector<f64>) -> Point2 {
        let p = &self.sel_phi * x0 + &self.sel_omega;
        Point2::new(p[0], p[1])
    }
}

/// Matrix exponential by scaling-and-squaring with a Taylor core.
pub(crate) fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let norm = m.amax();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = m / 2f64.powi(squarings);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=30 {
        term = &term * &scaled / k as f64;
        result += &term;
        if term.amax() < 1e-18 * result.amax().max(1.0) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Exact zero-order-hold discretization via the augmented matrix exponential:
/// `exp(dt·[[A, B, c], [0, 0, 0], [0, 0, 0]])` yields `A_d`, `B_d`, `c_d` in
/// its top block row.
pub fn discretize_zoh(
    cont: &ContinuousAffineDynamics,
    dt: f64,
) -> Result<DiscreteAffineDynamics, DynamicsError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(DynamicsError::InvalidTimeStep);
    }
    let n = cont.state_dim();
    let l = cont.input_dim();
    let dim = n + l + 1;
    let mut aug = DMatrix::zeros(dim, dim);
    aug.view_mut((0, 0), (n, n)).copy_from(&cont.a);
    aug.view_mut((0, n), (n, l)).copy_from(&cont.b);
    aug.view_mut((0, n + l), (n, 1)).copy_from(&cont.c);
    let e = expm(&(aug * dt));
    let a_d = e.view((0, 0), (n, n)).into_owned();
    let b_d = e.view((0, n), (n, l)).into_owned();
    let c_d = DVector::from_column_slice(e.view((0, n + l), (n, 1)).clone_owned().as_slice());
    DiscreteAffineDynamics::new(a_d, b_d, c_d, dt)
}

/// Applies the recurrence `x_{k+1} = A x_k + B u_k + c` starting from `x0`.
pub fn rollout(
    dynamics: &DiscreteAffineDynamics,
    x0: &DVector<f64>,
    inputs: &[DVector<f64>],
) -> Trajectory {
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(x0.clone());
    for u in inputs {
        let next = dynamics.step(states.last().unwrap(), u);
        states.push(next);
    }
    Trajectory {
        states,
        inputs: inputs.to_vec(),
        dt: dynamics.dt,
    }
}

/// Closed form of `N` recurrence applications:
/// `phi = A^N`, `gamma = [A^{N-1}B … AB B]`, `omega = Σ A^k c`.
pub fn condense_terminal(
    dynamics: &DiscreteAffineDynamics,
    horizon: usize,
    selector: &TerminalSelector,
) -> Result<CondensedMap, DynamicsError> {
    if horizon == 0 {
        return Err(DynamicsError::DimensionMismatch("horizon must be >= 1"));
    }
    if selector.state_dim() != dynamics.state_dim() {
        return Err(DynamicsError::DimensionMismatch("selector state dim"));
    }
    let n = dynamics.state_dim();
    let l = dynamics.input_dim();
    let mut gamma = DMatrix::zeros(n, horizon * l);
    let mut omega = DVector::zeros(n);
    // power = A^{N-1-k} built backwards over the block columns.
    let mut power = DMatrix::identity(n, n);
    for k in (0..horizon).rev() {
        gamma
            .view_mut((0, k * l), (n, l))
            .copy_from(&(&power * &dynamics.b));
        omega += &power * &dynamics.c;
        power = &power * &dynamics.a;
    }
    let phi = power;
    let e = selector.matrix();
    Ok(CondensedMap {
        sel_phi: &e * &phi,
        sel_gamma: &e * &gamma,
        sel_omega: &e * &omega,
        phi,
        gamma,
        omega,
        horizon,
        input_dim: l,
    })
}

/// `count` selector-projected terminal points under i.i.d. uniform inputs.
///
/// Every input element is a pure function of `(seed, sample, element)`, so the
/// cloud is reproducible independent of evaluation order or thread count.
pub fn sample_successor(
    dynamics: &DiscreteAffineDynamics,
    x0: &DVector<f64>,
    input_box: &InputBox,
    horizon: usize,
    selector: &TerminalSelector,
    count: usize,
    seed: u64,
) -> Result<Vec<Point2>, DynamicsError> {
    if input_box.dim() != dynamics.input_dim() {
        return Err(DynamicsError::DimensionMismatch("input box dim"));
    }
    let map = condense_terminal(dynamics, horizon, selector)?;
    let l = dynamics.input_dim();
    let mut out = Vec::with_capacity(count);
    let mut stacked = DVector::zeros(horizon * l);
    for sample in 0..count {
        for e in 0..horizon * l {
            let t = unit_f64(seed, sample as u64, e as u64);
            let i = e % l;
            stacked[e] = input_box.lower[i] + t * (input_box.upper[i] - input_box.lower[i]);
        }
        out.push(map.projected_terminal(x0, &stacked));
    }
    Ok(out)
}
