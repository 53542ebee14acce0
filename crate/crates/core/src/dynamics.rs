//! Controlled dynamical systems on uniform time grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::{BasisTerm, Expansion};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() {
            return Err(Error::invalid(format!("time step must be finite and positive, got {dt}")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("a grid needs at least one step"));
        }
        Ok(Self { t0, dt, n_steps })
    }

    /// Number of nodes (`n_steps + 1`).
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn end(&self) -> f64 {
        self.time(self.n_steps)
    }

    /// Sub-grid covering nodes `start..=end`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if end <= start || end > self.n_steps {
            return Err(Error::invalid(format!(
                "node range {start}..={end} is not a grid of at least one step within 0..={}",
                self.n_steps
            )));
        }
        Ok(Self {
            t0: self.time(start),
            dt: self.dt,
            n_steps: end - start,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalRole {
    Interactive,
    Pure,
    Epsilon,
    Desire,
}

/// A vector-valued series sampled on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    pub grid: TimeGrid,
    pub values: Vec<Vec<f64>>,
    pub role: SignalRole,
}

impl ControlSignal {
    pub fn new(grid: TimeGrid, values: Vec<Vec<f64>>, role: SignalRole) -> Result<Self> {
        check_series(&grid, &values, "signal")?;
        Ok(Self { grid, values, role })
    }

    pub fn zeros(grid: TimeGrid, dim: usize, role: SignalRole) -> Self {
        Self {
            grid,
            values: vec![vec![0.0; dim]; grid.len()],
            role,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        Ok(Self {
            grid: self.grid.slice(start, end)?,
            values: self.values[start..=end].to_vec(),
            role: self.role,
        })
    }
}

pub(crate) fn check_series(grid: &TimeGrid, values: &[Vec<f64>], what: &str) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::dims(format!(
            "{what} has {} samples, grid has {} nodes",
            values.len(),
            grid.len()
        )));
    }
    let dim = values[0].len();
    if let Some(k) = values.iter().position(|v| v.len() != dim) {
        return Err(Error::dims(format!(
            "{what} sample {k} has dimension {}, expected {dim}",
            values[k].len()
        )));
    }
    Ok(())
}

/// Recorded history: states and (optionally) the interactive controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<Vec<f64>>,
    pub controls: Option<Vec<Vec<f64>>>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, states: Vec<Vec<f64>>, controls: Option<Vec<Vec<f64>>>) -> Result<Self> {
        check_series(&grid, &states, "states")?;
        if let Some(c) = &controls {
            check_series(&grid, c, "controls")?;
        }
        Ok(Self {
            grid,
            states,
            controls,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.states[0].len()
    }

    pub fn control_dim(&self) -> usize {
        self.controls.as_ref().map_or(0, |c| c[0].len())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        Ok(Self {
            grid: self.grid.slice(start, end)?,
            states: self.states[start..=end].to_vec(),
            controls: self.controls.as_ref().map(|c| c[start..=end].to_vec()),
        })
    }

    pub fn with_controls(&self, controls: Option<Vec<Vec<f64>>>) -> Result<Self> {
        Self::new(self.grid, self.states.clone(), controls)
    }

    pub fn control_signal(&self, role: SignalRole) -> Option<ControlSignal> {
        self.controls.as_ref().map(|c| ControlSignal {
            grid: self.grid,
            values: c.clone(),
            role,
        })
    }
}

/// Right-hand side `dphi/dt = sum_j c_ij psi_j(phi, u)` over a monomial dictionary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsModel {
    pub state_dim: usize,
    pub control_dim: usize,
    pub terms: Vec<BasisTerm>,
    pub coefficients: Vec<Vec<f64>>,
}

impl DynamicsModel {
    pub fn zeros(state_dim: usize, control_dim: usize, terms: Vec<BasisTerm>) -> Self {
        let p = terms.len();
        Self {
            state_dim,
            control_dim,
            terms,
            coefficients: vec![vec![0.0; p]; state_dim],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.as_expansion().validate()?;
        if self.coefficients.len() != self.state_dim {
            return Err(Error::dims(format!(
                "{} coefficient rows for state dimension {}",
                self.coefficients.len(),
                self.state_dim
            )));
        }
        Ok(())
    }

    /// Sets the coefficient of `term` in equation `row`, adding the term when missing.
    pub fn set(&mut self, row: usize, term: BasisTerm, value: f64) -> &mut Self {
        let col = match self.terms.iter().position(|t| *t == term) {
            Some(c) => c,
            None => {
                self.terms.push(term);
                for r in &mut self.coefficients {
                    r.push(0.0);
                }
                self.terms.len() - 1
            }
        };
        self.coefficients[row][col] = value;
        self
    }

    pub fn coefficient(&self, row: usize, term: &BasisTerm) -> f64 {
        self.terms
            .iter()
            .position(|t| t == term)
            .map_or(0.0, |c| self.coefficients[row][c])
    }

    pub fn as_expansion(&self) -> Expansion {
        Expansion {
            x_dim: self.state_dim,
            y_dim: self.control_dim,
            terms: self.terms.clone(),
            coefficients: self.coefficients.clone(),
        }
    }

    pub fn from_expansion(e: Expansion) -> Self {
        Self {
            state_dim: e.x_dim,
            control_dim: e.y_dim,
            terms: e.terms,
            coefficients: e.coefficients,
        }
    }

    fn rhs_unchecked(&self, state: &[f64], control: &[f64]) -> Vec<f64> {
        let feats: Vec<f64> = self.terms.iter().map(|t| t.eval(state, control)).collect();
        self.coefficients
            .iter()
            .map(|row| row.iter().zip(&feats).map(|(c, f)| c * f).sum())
            .collect()
    }
}

pub fn evaluate_rhs(model: &DynamicsModel, state: &[f64], control: &[f64]) -> Result<Vec<f64>> {
    if state.len() != model.state_dim || control.len() != model.control_dim {
        return Err(Error::dims(format!(
            "model expects state/control dims ({}, {}), got ({}, {})",
            model.state_dim,
            model.control_dim,
            state.len(),
            control.len()
        )));
    }
    Ok(model.rhs_unchecked(state, control))
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(yi, xi)| yi + a * xi).collect()
}

fn rk4_step(
    state: &[f64],
    t: f64,
    dt: f64,
    mut f: impl FnMut(f64, &[f64]) -> Vec<f64>,
) -> Vec<f64> {
    let k1 = f(t, state);
    let k2 = f(t + 0.5 * dt, &axpy(0.5 * dt, &k1, state));
    let k3 = f(t + 0.5 * dt, &axpy(0.5 * dt, &k2, state));
    let k4 = f(t + dt, &axpy(dt, &k3, state));
    state
        .iter()
        .enumerate()
        .map(|(i, s)| s + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Classic RK4 on the grid; controls are linearly interpolated between nodes.
pub fn integrate(
    model: &DynamicsModel,
    initial_state: &[f64],
    controls: Option<&ControlSignal>,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    if initial_state.len() != model.state_dim {
        return Err(Error::dims(format!(
            "initial state has dimension {}, model expects {}",
            initial_state.len(),
            model.state_dim
        )));
    }
    let zero_controls;
    let ctrl: &[Vec<f64>] = match controls {
        Some(c) => {
            if c.grid != *grid {
                return Err(Error::dims("control signal is defined on a different grid"));
            }
            if c.dim() != model.control_dim {
                return Err(Error::dims(format!(
                    "control dimension {} does not match model control dimension {}",
                    c.dim(),
                    model.control_dim
                )));
            }
            &c.values
        }
        None => {
            zero_controls = vec![vec![0.0; model.control_dim]; grid.len()];
            &zero_controls
        }
    };
    let mut states = Vec::with_capacity(grid.len());
    states.push(initial_state.to_vec());
    for k in 0..grid.n_steps {
        let (u0, u1) = (&ctrl[k], &ctrl[k + 1]);
        let t0 = grid.time(k);
        let dt = grid.dt;
        let next = rk4_step(&states[k], t0, dt, |t, x| {
            let s = (t - t0) / dt;
            let u: Vec<f64> = u0.iter().zip(u1).map(|(a, b)| a + s * (b - a)).collect();
            model.rhs_unchecked(x, &u)
        });
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { node: k + 1 });
        }
        states.push(next);
    }
    Ok(Trajectory {
        grid: *grid,
        states,
        controls: if model.control_dim > 0 || controls.is_some() {
            Some(ctrl.to_vec())
        } else {
            None
        },
    })
}

/// RK4 with a control law evaluated at every stage: `u = law(t, phi)`.
///
/// `at_node` is called once per node before the step leaving it, with the node
/// index and state; it may update whatever internal state the law keeps.
/// The returned trajectory records `law(t_k, phi_k)` at each node.
pub fn integrate_closed_loop<L, N>(
    model: &DynamicsModel,
    initial_state: &[f64],
    grid: &TimeGrid,
    mut law: L,
    mut at_node: N,
) -> Result<Trajectory>
where
    L: FnMut(f64, &[f64]) -> Vec<f64>,
    N: FnMut(usize, &[f64]),
{
    if initial_state.len() != model.state_dim {
        return Err(Error::dims("initial state dimension does not match model"));
    }
    let mut states = Vec::with_capacity(grid.len());
    let mut controls = Vec::with_capacity(grid.len());
    states.push(initial_state.to_vec());
    for k in 0..=grid.n_steps {
        at_node(k, &states[k]);
        let u = law(grid.time(k), &states[k]);
        if u.len() != model.control_dim {
            return Err(Error::dims("control law output does not match model control dimension"));
        }
        controls.push(u);
        if k == grid.n_steps {
            break;
        }
        let next = rk4_step(&states[k], grid.time(k), grid.dt, |t, x| {
            let u = law(t, x);
            model.rhs_unchecked(x, &u)
        });
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { node: k + 1 });
        }
        states.push(next);
    }
    Ok(Trajectory {
        grid: *grid,
        states,
        controls: Some(controls),
    })
}

/// Second-order finite-difference derivative estimates at every node.
pub fn estimate_derivatives(traj: &Trajectory) -> Result<Vec<Vec<f64>>> {
    derivatives_of(&traj.states, traj.grid.dt)
}

pub(crate) fn derivatives_of(series: &[Vec<f64>], dt: f64) -> Result<Vec<Vec<f64>>> {
    let n = series.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "derivative estimation needs at least 3 nodes, got {n}"
        )));
    }
    let d = series[0].len();
    let mut out = Vec::with_capacity(n);
    let h2 = 2.0 * dt;
    out.push(
        (0..d)
            .map(|i| (-3.0 * series[0][i] + 4.0 * series[1][i] - series[2][i]) / h2)
            .collect(),
    );
    for k in 1..n - 1 {
        out.push(
            (0..d)
                .map(|i| (series[k + 1][i] - series[k - 1][i]) / h2)
                .collect(),
        );
    }
    out.push(
        (0..d)
            .map(|i| (3.0 * series[n - 1][i] - 4.0 * series[n - 2][i] + series[n - 3][i]) / h2)
            .collect(),
    );
    Ok(out)
}
