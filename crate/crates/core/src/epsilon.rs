//! ε-representation of interactive controls, desires and recursive unraveling.
//!
//! Every control channel `i` is coupled as `u_i = A_i(phi, u°_i) + B_i(phi, u°_i) ε_i`,
//! affine in the hidden parameters. Recovery of `ε` is a per-node linear solve.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::detection::{
    default_threshold, detect_hidden_inputs, fit_dynamics, select_interactive_model, Candidate,
    CandidateRanking, DetectionConfig, DetectionVerdict, SelectionConfig,
};
use crate::dynamics::{ControlSignal, SignalRole, Trajectory};
use crate::error::{Error, Result};
use crate::expansion::{monomial_dictionary, BasisTerm, Expansion};
use crate::filtration::{apply_filtration, FiltrationSpec, SignalSet, SignalSource};
use crate::regression::fit_expansion;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingChannel {
    pub control_dim: usize,
    pub epsilon_dim: usize,
    /// `A_i(phi, u°_i)`, `control_dim` outputs.
    pub offset: Expansion,
    /// `B_i(phi, u°_i)`, `control_dim * epsilon_dim` outputs in row-major order.
    pub gain: Expansion,
}

impl CouplingChannel {
    /// `u = u° + ε`.
    pub fn additive(state_dim: usize, dim: usize) -> Self {
        let mut gain = Expansion::zeros(state_dim, dim, dim * dim);
        for i in 0..dim {
            gain.add(i * dim + i, BasisTerm::constant(state_dim, dim), 1.0);
        }
        Self {
            control_dim: dim,
            epsilon_dim: dim,
            offset: Expansion::identity_in_y(state_dim, dim),
            gain,
        }
    }

    /// Scalar `u = ε · u°`.
    pub fn multiplicative(state_dim: usize) -> Self {
        Self {
            control_dim: 1,
            epsilon_dim: 1,
            offset: Expansion::zeros(state_dim, 1, 1),
            gain: Expansion::identity_in_y(state_dim, 1),
        }
    }

    /// Scalar `u = u° + phi_j ε`.
    pub fn state_scaled(state_dim: usize, j: usize) -> Self {
        let mut gain = Expansion::zeros(state_dim, 1, 1);
        gain.add(0, BasisTerm::state(j, state_dim, 1), 1.0);
        Self {
            control_dim: 1,
            epsilon_dim: 1,
            offset: Expansion::identity_in_y(state_dim, 1),
            gain,
        }
    }

    fn validate(&self, state_dim: usize) -> Result<()> {
        self.offset.validate()?;
        self.gain.validate()?;
        let ok = self.offset.x_dim == state_dim
            && self.gain.x_dim == state_dim
            && self.offset.y_dim == self.control_dim
            && self.gain.y_dim == self.control_dim
            && self.offset.out_dim() == self.control_dim
            && self.gain.out_dim() == self.control_dim * self.epsilon_dim;
        if !ok {
            return Err(Error::dims("coupling channel expansions have inconsistent arity"));
        }
        Ok(())
    }

    pub fn offset_and_gain(&self, phi: &[f64], pure: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
        let a = self.offset.eval(phi, pure);
        let b = self.gain.eval(phi, pure);
        let gain = DMatrix::from_row_slice(self.control_dim, self.epsilon_dim, &b);
        (a, gain)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingForm {
    pub state_dim: usize,
    pub channels: Vec<CouplingChannel>,
}

impl CouplingForm {
    pub fn new(state_dim: usize, channels: Vec<CouplingChannel>) -> Result<Self> {
        let c = Self {
            state_dim,
            channels,
        };
        c.validate()?;
        Ok(c)
    }

    /// One additive channel per entry of `dims`.
    pub fn additive(state_dim: usize, dims: &[usize]) -> Self {
        Self {
            state_dim,
            channels: dims
                .iter()
                .map(|&k| CouplingChannel::additive(state_dim, k))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::invalid("coupling form has no channels"));
        }
        self.channels
            .iter()
            .try_for_each(|c| c.validate(self.state_dim))
    }

    pub fn control_dim(&self) -> usize {
        self.channels.iter().map(|c| c.control_dim).sum()
    }

    pub fn epsilon_dim(&self) -> usize {
        self.channels.iter().map(|c| c.epsilon_dim).sum()
    }

    /// `u = A(phi, u°) + B(phi, u°) ε` over all channels.
    pub fn compose(&self, phi: &[f64], pure: &[f64], eps: &[f64]) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.control_dim());
        let (mut pk, mut pe) = (0, 0);
        for ch in &self.channels {
            let p = &pure[pk..pk + ch.control_dim];
            let e = &eps[pe..pe + ch.epsilon_dim];
            let (a, b) = ch.offset_and_gain(phi, p);
            let be = &b * DVector::from_column_slice(e);
            u.extend(a.iter().zip(be.iter()).map(|(x, y)| x + y));
            pk += ch.control_dim;
            pe += ch.epsilon_dim;
        }
        u
    }

    fn check_series(&self, traj: &Trajectory, u: &ControlSignal, pure: &ControlSignal) -> Result<()> {
        self.validate()?;
        if u.grid != traj.grid || pure.grid != traj.grid {
            return Err(Error::dims("signals are not on the trajectory grid"));
        }
        if traj.state_dim() != self.state_dim {
            return Err(Error::dims("trajectory state dimension differs from coupling"));
        }
        if u.dim() != self.control_dim() || pure.dim() != self.control_dim() {
            return Err(Error::dims(format!(
                "coupling expects control dimension {}, got u: {}, u°: {}",
                self.control_dim(),
                u.dim(),
                pure.dim()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRepresentation {
    pub coupling: CouplingForm,
    pub epsilon: ControlSignal,
    /// Largest absolute mismatch between replayed and recorded controls.
    pub recovery_residual: f64,
}

impl EpsilonRepresentation {
    pub fn replay(&self, traj: &Trajectory, pure: &ControlSignal) -> Vec<Vec<f64>> {
        (0..traj.len())
            .map(|k| {
                self.coupling
                    .compose(&traj.states[k], &pure.values[k], &self.epsilon.values[k])
            })
            .collect()
    }
}

struct Solved {
    eps: Vec<Vec<f64>>,
    residual: f64,
}

fn solve_nodes(
    coupling: &CouplingForm,
    u: &[Vec<f64>],
    pure: &[Vec<f64>],
    states: &[Vec<f64>],
    singular_tolerance: Option<f64>,
) -> Result<Solved> {
    let mut eps = Vec::with_capacity(u.len());
    let mut residual: f64 = 0.0;
    for k in 0..u.len() {
        let mut e_node = Vec::with_capacity(coupling.epsilon_dim());
        let mut pk = 0;
        for (ci, ch) in coupling.channels.iter().enumerate() {
            let p = &pure[k][pk..pk + ch.control_dim];
            let target: Vec<f64> = u[k][pk..pk + ch.control_dim].to_vec();
            let (a, b) = ch.offset_and_gain(&states[k], p);
            let rhs = DVector::from_iterator(ch.control_dim, target.iter().zip(&a).map(|(t, x)| t - x));
            let e = if ch.epsilon_dim == 0 {
                DVector::zeros(0)
            } else {
                let svd = b.clone().svd(true, true);
                let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
                let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
                if let Some(tol) = singular_tolerance {
                    if !(smin >= tol) {
                        return Err(Error::SingularCoupling {
                            node: k,
                            channel: ci,
                            sigma: smin,
                        });
                    }
                }
                if smax == 0.0 {
                    DVector::zeros(ch.epsilon_dim)
                } else {
                    svd.solve(&rhs, 1e-13 * smax)
                        .map_err(|m| Error::DegenerateRegression(m.to_string()))?
                }
            };
            let fitted = if ch.epsilon_dim == 0 {
                DVector::zeros(ch.control_dim)
            } else {
                &b * &e
            };
            for i in 0..ch.control_dim {
                residual = residual.max((fitted[i] - rhs[i]).abs());
            }
            e_node.extend(e.iter());
            pk += ch.control_dim;
        }
        eps.push(e_node);
    }
    Ok(Solved { eps, residual })
}

/// Solves `u = A + B ε` node by node in the least-squares sense.
pub fn recover_epsilon(
    coupling: &CouplingForm,
    u: &ControlSignal,
    u_pure: &ControlSignal,
    traj: &Trajectory,
    singular_tolerance: f64,
) -> Result<EpsilonRepresentation> {
    if !(singular_tolerance > 0.0) {
        return Err(Error::invalid("singular tolerance must be positive"));
    }
    coupling.check_series(traj, u, u_pure)?;
    let solved = solve_nodes(
        coupling,
        &u.values,
        &u_pure.values,
        &traj.states,
        Some(singular_tolerance),
    )?;
    Ok(EpsilonRepresentation {
        coupling: coupling.clone(),
        epsilon: ControlSignal::new(traj.grid, solved.eps, SignalRole::Epsilon)?,
        recovery_residual: solved.residual,
    })
}

/// Pseudo-inverse recovery that never fails on rank loss (min-norm ε where `B` vanishes).
pub(crate) fn recover_epsilon_lenient(
    coupling: &CouplingForm,
    u: &[Vec<f64>],
    pure: &[Vec<f64>],
    states: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    Ok(solve_nodes(coupling, u, pure, states, None)?.eps)
}

/// One desire series per filtration of `[ε]` and `[phi]`.
pub fn extract_desires(
    specs: &[FiltrationSpec],
    eps: &EpsilonRepresentation,
    traj: &Trajectory,
) -> Result<Vec<ControlSignal>> {
    let signals = SignalSet::new(traj.grid)
        .with(SignalSource::State, traj.states.clone())?
        .with_signal(SignalSource::Epsilon, &eps.epsilon)?;
    specs
        .iter()
        .map(|spec| {
            if !spec.reads_only(&[SignalSource::Epsilon, SignalSource::State]) {
                return Err(Error::MissingInput(
                    "desire filtrations may only read eps and phi".into(),
                ));
            }
            let mut out = apply_filtration(spec, &signals)?;
            out.role = SignalRole::Desire;
            Ok(out)
        })
        .collect()
}

/// Regression `ε ≈ M(phi, v°)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesireMap {
    /// Primary argument `phi`, secondary argument the concatenated desires.
    pub map: Expansion,
    pub residual: f64,
}

impl DesireMap {
    pub fn eval(&self, phi: &[f64], desires: &[f64]) -> Vec<f64> {
        self.map.eval(phi, desires)
    }
}

pub(crate) fn concat_signals(signals: &[ControlSignal], n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| signals.iter().flat_map(|s| s.values[k].iter().copied()).collect())
        .collect()
}

pub fn fit_desire_map(
    desires: &[ControlSignal],
    traj: &Trajectory,
    eps: &EpsilonRepresentation,
    dictionary: &[BasisTerm],
    ridge: f64,
) -> Result<DesireMap> {
    let n = traj.len();
    if desires.iter().any(|d| d.grid != traj.grid) || eps.epsilon.grid != traj.grid {
        return Err(Error::dims("desires and ε must share the trajectory grid"));
    }
    if n < dictionary.len() {
        return Err(Error::InsufficientData(format!(
            "{n} nodes cannot determine {} dictionary terms",
            dictionary.len()
        )));
    }
    let d = traj.state_dim();
    let m: usize = desires.iter().map(ControlSignal::dim).sum();
    if let Some(t) = dictionary.iter().find(|t| t.x_dim() != d || t.y_dim() != m) {
        return Err(Error::dims(format!(
            "dictionary term {t} does not take (phi: {d}, v°: {m}) arguments"
        )));
    }
    let ys = concat_signals(desires, n);
    let fit = fit_expansion(
        &traj.states,
        &ys,
        &eps.epsilon.values,
        dictionary,
        d,
        m,
        ridge,
        0.0,
    )?;
    Ok(DesireMap {
        map: fit.expansion,
        residual: fit.rms,
    })
}

/// One level of the unraveling tree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnravelLevel {
    pub level: usize,
    /// Hidden-input test of this level's magnitudes treated as an autonomous system.
    pub verdict: DetectionVerdict,
    pub ranking: CandidateRanking,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub child: Option<Box<UnravelLevel>>,
}

impl UnravelLevel {
    pub fn depth(&self) -> usize {
        1 + self.child.as_ref().map_or(0, |c| c.depth())
    }

    pub fn level(&self, l: usize) -> Option<&UnravelLevel> {
        if self.level == l {
            Some(self)
        } else {
            self.child.as_deref().and_then(|c| c.level(l))
        }
    }
}

/// Treats `ε` as new observed magnitudes and reruns candidate selection on them,
/// recursing on the ε recovered by each level's best candidate.
///
/// At each level the magnitudes play the role of the interactive controls of the
/// original states. `menus[l]` is used at level `l + 1`; the last menu is reused
/// for deeper levels.
pub fn unravel_recursive(
    traj: &Trajectory,
    eps: &EpsilonRepresentation,
    menus: &[Vec<Candidate>],
    depth: usize,
    detection: &DetectionConfig,
    selection: &SelectionConfig,
) -> Result<UnravelLevel> {
    if depth == 0 {
        return Err(Error::invalid("unraveling depth must be at least 1"));
    }
    if menus.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    unravel_level(traj, eps.epsilon.values.clone(), menus, 1, depth, detection, selection)
}

fn unravel_level(
    traj: &Trajectory,
    magnitudes: Vec<Vec<f64>>,
    menus: &[Vec<Candidate>],
    level: usize,
    depth: usize,
    detection: &DetectionConfig,
    selection: &SelectionConfig,
) -> Result<UnravelLevel> {
    let verdict = magnitude_verdict(traj, &magnitudes, detection)?;
    let level_traj = traj.with_controls(Some(magnitudes.clone()))?;
    let menu = &menus[(level - 1).min(menus.len() - 1)];
    let ranking = select_interactive_model(&level_traj, menu, selection)?;
    let child = if level < depth {
        let best = &menu[ranking.best_index];
        let signals = SignalSet::from_trajectory(&level_traj);
        let pure = apply_filtration(&best.filtration, &signals)?;
        let m = ControlSignal::new(traj.grid, magnitudes, SignalRole::Epsilon)?;
        let next = recover_epsilon(
            &best.coupling,
            &m,
            &pure,
            &level_traj,
            selection.singular_tolerance,
        )?;
        Some(Box::new(unravel_level(
            traj,
            next.epsilon.values,
            menus,
            level + 1,
            depth,
            detection,
            selection,
        )?))
    } else {
        None
    };
    Ok(UnravelLevel {
        level,
        verdict,
        ranking,
        child,
    })
}

fn magnitude_verdict(
    traj: &Trajectory,
    magnitudes: &[Vec<f64>],
    cfg: &DetectionConfig,
) -> Result<DetectionVerdict> {
    let as_states = Trajectory::new(traj.grid, magnitudes.to_vec(), None)?;
    let dict = monomial_dictionary(as_states.state_dim(), 0, cfg.degree);
    let (model, _) = fit_dynamics(&as_states, &dict, false, cfg.ridge, cfg.sparsify_threshold)?;
    let threshold = default_threshold(&as_states, &dict, cfg)?;
    detect_hidden_inputs(&as_states, &model, threshold)
}
