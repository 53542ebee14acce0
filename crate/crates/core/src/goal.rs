//! Goal functionals `K = ∫ g(phi, phi') dt + h(phi(T))`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{derivatives_of, Trajectory};
use crate::error::{Error, Result};
use crate::expansion::{BasisTerm, Expansion};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Horizon {
    Full,
    /// The last `nodes` grid nodes.
    Trailing { nodes: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalFunctional {
    /// Scalar integrand over `(phi, dphi/dt)`.
    pub running_cost: Expansion,
    /// Scalar function of the final state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminal_cost: Option<Expansion>,
    pub horizon: Horizon,
}

impl GoalFunctional {
    pub fn new(running_cost: Expansion) -> Self {
        Self {
            running_cost,
            terminal_cost: None,
            horizon: Horizon::Full,
        }
    }

    /// `∫ |phi - target|^2 dt` over the full horizon.
    pub fn tracking(target: &[f64]) -> Self {
        let d = target.len();
        let mut g = Expansion::zeros(d, d, 1);
        for (i, &r) in target.iter().enumerate() {
            let mut sq = BasisTerm::constant(d, d);
            sq.state_exponents[i] = 2;
            g.add(0, sq, 1.0);
            g.add(0, BasisTerm::state(i, d, d), -2.0 * r);
            g.add(0, BasisTerm::constant(d, d), r * r);
        }
        Self::new(g)
    }

    /// `∫ (phi_i - phi_j - offset)^2 dt`, e.g. a pursuit distance.
    pub fn gap(d: usize, i: usize, j: usize, offset: f64) -> Self {
        let mut g = Expansion::zeros(d, d, 1);
        let mono = |a: usize, b: usize| {
            let mut t = BasisTerm::constant(d, d);
            t.state_exponents[a] += 1;
            t.state_exponents[b] += 1;
            t
        };
        g.add(0, mono(i, i), 1.0);
        g.add(0, mono(j, j), 1.0);
        g.add(0, mono(i, j), -2.0);
        g.add(0, BasisTerm::state(i, d, d), -2.0 * offset);
        g.add(0, BasisTerm::state(j, d, d), 2.0 * offset);
        g.add(0, BasisTerm::constant(d, d), offset * offset);
        Self::new(g)
    }

    /// `∫ |phi'|^2 dt` (effort / stillness).
    pub fn effort(d: usize) -> Self {
        let mut g = Expansion::zeros(d, d, 1);
        for i in 0..d {
            let mut t = BasisTerm::constant(d, d);
            t.control_exponents[i] = 2;
            g.add(0, t, 1.0);
        }
        Self::new(g)
    }

    pub fn state_dim(&self) -> usize {
        self.running_cost.x_dim
    }

    pub fn validate(&self) -> Result<()> {
        self.running_cost.validate()?;
        let d = self.running_cost.x_dim;
        if self.running_cost.y_dim != d || self.running_cost.out_dim() != 1 {
            return Err(Error::dims(
                "running cost must be a scalar function of (phi, dphi/dt)",
            ));
        }
        if let Some(h) = &self.terminal_cost {
            h.validate()?;
            if h.x_dim != d || h.out_dim() != 1 {
                return Err(Error::dims("terminal cost must be a scalar function of phi"));
            }
        }
        if let Horizon::Trailing { nodes } = self.horizon {
            if nodes < 2 {
                return Err(Error::invalid("trailing horizon needs at least 2 nodes"));
            }
        }
        Ok(())
    }

    fn uses_derivative(&self) -> bool {
        self.running_cost.terms.iter().zip(0..).any(|(t, c)| {
            t.control_exponents.iter().any(|&e| e > 0) && self.running_cost.coefficients[0][c] != 0.0
        })
    }
}

/// Trapezoidal quadrature of the running cost plus the terminal cost.
pub fn evaluate_goal(goal: &GoalFunctional, traj: &Trajectory) -> Result<f64> {
    goal.validate()?;
    let d = goal.state_dim();
    if traj.state_dim() != d {
        return Err(Error::dims(format!(
            "goal is defined on dimension {d}, trajectory has {}",
            traj.state_dim()
        )));
    }
    let n = traj.len();
    let start = match goal.horizon {
        Horizon::Full => 0,
        Horizon::Trailing { nodes } => n.saturating_sub(nodes),
    };
    let states = &traj.states[start..];
    let derivs = if goal.uses_derivative() {
        derivatives_of(states, traj.grid.dt)?
    } else {
        vec![vec![0.0; d]; states.len()]
    };
    let g: Vec<f64> = states
        .iter()
        .zip(&derivs)
        .map(|(x, dx)| goal.running_cost.eval(x, dx)[0])
        .collect();
    let dt = traj.grid.dt;
    let mut integral = 0.0;
    for w in g.windows(2) {
        integral += 0.5 * dt * (w[0] + w[1]);
    }
    let terminal = goal
        .terminal_cost
        .as_ref()
        .map_or(0.0, |h| h.eval(&traj.states[n - 1], &vec![0.0; h.y_dim])[0]);
    Ok(integral + terminal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::TimeGrid;

    fn square() -> GoalFunctional {
        GoalFunctional::tracking(&[0.0])
    }

    #[test]
    fn zero_trajectory_has_zero_cost() {
        let g = TimeGrid::new(0.0, 0.1, 10).unwrap();
        let tr = Trajectory::new(g, vec![vec![0.0]; 11], None).unwrap();
        assert_eq!(evaluate_goal(&square(), &tr).unwrap(), 0.0);
    }

    #[test]
    fn constant_integrand_is_exact() {
        let g = TimeGrid::new(0.0, 0.25, 8).unwrap();
        let tr = Trajectory::new(g, vec![vec![1.0]; 9], None).unwrap();
        assert!((evaluate_goal(&square(), &tr).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn square_of_time_integrates_to_a_third() {
        let g = TimeGrid::new(0.0, 0.001, 1000).unwrap();
        let tr = Trajectory::new(g, g.times().into_iter().map(|t| vec![t]).collect(), None).unwrap();
        // closed form: ∫_0^1 t^2 dt = 1/3
        assert!((evaluate_goal(&square(), &tr).unwrap() - 1.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn effort_uses_derivatives_and_terminal_cost() {
        let g = TimeGrid::new(0.0, 0.01, 100).unwrap();
        let tr = Trajectory::new(g, g.times().into_iter().map(|t| vec![2.0 * t]).collect(), None).unwrap();
        let mut k = GoalFunctional::effort(1);
        k.terminal_cost = Some(Expansion::constant(1, 0, &[0.5]));
        assert!((evaluate_goal(&k, &tr).unwrap() - 4.5).abs() < 1e-9);
    }

    #[test]
    fn trailing_horizon_restricts_window() {
        let g = TimeGrid::new(0.0, 0.5, 4).unwrap();
        let tr = Trajectory::new(g, vec![vec![1.0]; 5], None).unwrap();
        let mut k = square();
        k.horizon = Horizon::Trailing { nodes: 3 };
        assert!((evaluate_goal(&k, &tr).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let g = TimeGrid::new(0.0, 0.5, 4).unwrap();
        let tr = Trajectory::new(g, vec![vec![1.0, 2.0]; 5], None).unwrap();
        assert!(matches!(evaluate_goal(&square(), &tr), Err(Error::DimensionMismatch(_))));
    }
}
