//! Subject and desire pictures of one game, and the transform between them.
//!
//! In the S-picture the subjects' controls `u = A(phi, u°) + B(phi, u°)·ε` drive
//! `phi' = Phi(phi, u)`. In the D-picture the desires act interactively instead:
//! `phi' = Phi~(phi, v)` with `v = v° + ε~`, where `v°` are desire filtrations of
//! `[ε]` and `[phi]` and the hidden parameters `ε~` absorb the subjects' pure
//! controls through a fitted map `ε~ ≈ H(phi, u°)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evaluate_rhs, ControlSignal, DynamicsModel, SignalRole, Trajectory};
use crate::epsilon::{concat_signals, extract_desires, CouplingForm, EpsilonRepresentation};
use crate::error::{Error, Result};
use crate::expansion::{monomial_dictionary, Expansion};
use crate::filtration::{apply_filtration, FiltrationSpec, SignalSet, SignalSource};
use crate::regression::fit_expansion;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PictureRole {
    Subjects,
    Desires,
}

/// Hidden parameters of one picture as a function of `phi` and the other
/// picture's pure inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiddenParameterMap {
    pub map: Expansion,
    /// Root-mean-square fit residual on the construction trajectory.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PictureModel {
    pub dynamics: DynamicsModel,
    pub coupling: CouplingForm,
    pub role: PictureRole,
    /// Pure-control filtrations (subjects) or desire filtrations (desires), one per channel.
    pub filtrations: Vec<FiltrationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_parameter_map: Option<HiddenParameterMap>,
}

impl PictureModel {
    pub fn subjects(
        dynamics: DynamicsModel,
        coupling: CouplingForm,
        pure_filtrations: Vec<FiltrationSpec>,
    ) -> Result<Self> {
        let p = Self {
            dynamics,
            coupling,
            role: PictureRole::Subjects,
            filtrations: pure_filtrations,
            hidden_parameter_map: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.dynamics.validate()?;
        self.coupling.validate()?;
        if self.coupling.state_dim != self.dynamics.state_dim
            || self.coupling.control_dim() != self.dynamics.control_dim
        {
            return Err(Error::dims(format!(
                "coupling is (state {}, control {}), dynamics is ({}, {})",
                self.coupling.state_dim,
                self.coupling.control_dim(),
                self.dynamics.state_dim,
                self.dynamics.control_dim
            )));
        }
        for f in &self.filtrations {
            f.validate()?;
        }
        if let Some(h) = &self.hidden_parameter_map {
            h.map.validate()?;
            if h.map.x_dim != self.dynamics.state_dim
                || h.map.out_dim() != self.coupling.epsilon_dim()
            {
                return Err(Error::dims("hidden parameter map does not match the picture"));
            }
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        self.dynamics.state_dim
    }

    /// Pure controls `u°` of an S-picture on a recorded game.
    pub fn pure_controls(&self, traj: &Trajectory, eps: &EpsilonRepresentation) -> Result<ControlSignal> {
        if self.role != PictureRole::Subjects {
            return Err(Error::invalid("pure controls are defined by the S-picture"));
        }
        let signals =
            SignalSet::from_trajectory(traj).with_signal(SignalSource::Epsilon, &eps.epsilon)?;
        let parts = self
            .filtrations
            .iter()
            .map(|f| apply_filtration(f, &signals))
            .collect::<Result<Vec<_>>>()?;
        let values = concat_signals(&parts, traj.len());
        let dim = values.first().map_or(0, Vec::len);
        if dim != self.coupling.control_dim() {
            return Err(Error::dims(format!(
                "pure filtrations yield {dim} components for {} controls",
                self.coupling.control_dim()
            )));
        }
        ControlSignal::new(traj.grid, values, SignalRole::Pure)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SDPair {
    pub s_picture: PictureModel,
    pub d_picture: PictureModel,
    pub consistency_residual: f64,
}

impl SDPair {
    /// Pairs two pictures and records their consistency on the given signals.
    pub fn new(
        s_picture: PictureModel,
        d_picture: PictureModel,
        traj: &Trajectory,
        u: &ControlSignal,
        v: &ControlSignal,
    ) -> Result<Self> {
        let mut pair = Self {
            s_picture,
            d_picture,
            consistency_residual: 0.0,
        };
        pair.consistency_residual = sd_consistency(&pair, traj, u, v)?;
        Ok(pair)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdConfig {
    /// Degree of the hidden-parameter dictionary over `(phi, u°)`.
    pub degree: u32,
    pub ridge: f64,
}

impl Default for SdConfig {
    fn default() -> Self {
        Self { degree: 1, ridge: 0.0 }
    }
}

pub fn sd_transform(
    s: &PictureModel,
    desire_channels: &[FiltrationSpec],
    eps: &EpsilonRepresentation,
    traj: &Trajectory,
) -> Result<PictureModel> {
    sd_transform_with(s, desire_channels, eps, traj, &SdConfig::default())
}

/// Builds the D-picture: desires become the interactive controls and
/// `ε~ = u - v°` is fitted as a function of `(phi, u°)` on `traj`.
pub fn sd_transform_with(
    s: &PictureModel,
    desire_channels: &[FiltrationSpec],
    eps: &EpsilonRepresentation,
    traj: &Trajectory,
    cfg: &SdConfig,
) -> Result<PictureModel> {
    if s.role != PictureRole::Subjects {
        return Err(Error::invalid("SD-transform starts from an S-picture"));
    }
    if desire_channels.is_empty() {
        return Err(Error::InsufficientData("a D-picture needs at least one desire".into()));
    }
    s.validate()?;
    let d = s.state_dim();
    let k = s.coupling.control_dim();
    if traj.state_dim() != d {
        return Err(Error::dims("trajectory and S-picture differ in state dimension"));
    }
    let u = traj
        .controls
        .as_ref()
        .ok_or_else(|| Error::MissingInput("SD-transform needs recorded controls".into()))?;
    if traj.control_dim() != k {
        return Err(Error::dims("trajectory and S-picture differ in control dimension"));
    }
    let pure = s.pure_controls(traj, eps)?;
    let desires = extract_desires(desire_channels, eps, traj)?;
    let dims: Vec<usize> = desires.iter().map(ControlSignal::dim).collect();
    if dims.iter().sum::<usize>() != k {
        return Err(Error::dims(format!(
            "desires have {} components in total, the game has {k} controls",
            dims.iter().sum::<usize>()
        )));
    }
    let v0 = concat_signals(&desires, traj.len());
    let hidden: Vec<Vec<f64>> = u
        .iter()
        .zip(&v0)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
        .collect();
    let dict = monomial_dictionary(d, k, cfg.degree);
    if traj.len() < dict.len() {
        return Err(Error::InsufficientData(format!(
            "{} nodes cannot determine {} hidden-map terms",
            traj.len(),
            dict.len()
        )));
    }
    let fit = fit_expansion(&traj.states, &pure.values, &hidden, &dict, d, k, cfg.ridge, 0.0)?;
    let picture = PictureModel {
        dynamics: s.dynamics.clone(),
        coupling: CouplingForm::additive(d, &dims),
        role: PictureRole::Desires,
        filtrations: desire_channels.to_vec(),
        hidden_parameter_map: Some(HiddenParameterMap {
            map: fit.expansion,
            residual: fit.rms,
        }),
    };
    picture.validate()?;
    Ok(picture)
}

/// Desire-picture controls `v = v° + ε~(phi, u°)` along a recorded game.
pub fn sd_replay(
    s: &PictureModel,
    d: &PictureModel,
    traj: &Trajectory,
    eps: &EpsilonRepresentation,
) -> Result<ControlSignal> {
    if d.role != PictureRole::Desires {
        return Err(Error::invalid("replay needs a D-picture"));
    }
    let map = d
        .hidden_parameter_map
        .as_ref()
        .ok_or_else(|| Error::MissingInput("D-picture has no hidden parameter map".into()))?;
    let pure = s.pure_controls(traj, eps)?;
    if map.map.y_dim != pure.dim() {
        return Err(Error::dims(format!(
            "hidden map takes {} pure inputs, S-picture provides {}",
            map.map.y_dim,
            pure.dim()
        )));
    }
    let desires = extract_desires(&d.filtrations, eps, traj)?;
    let v0 = concat_signals(&desires, traj.len());
    let values = (0..traj.len())
        .map(|n| {
            let h = map.map.eval(&traj.states[n], &pure.values[n]);
            v0[n].iter().zip(h).map(|(a, b)| a + b).collect()
        })
        .collect();
    ControlSignal::new(traj.grid, values, SignalRole::Interactive)
}

/// `max_n |Phi(phi_n, u_n) - Phi~(phi_n, v_n)|`.
pub fn sd_consistency(
    pair: &SDPair,
    traj: &Trajectory,
    u: &ControlSignal,
    v: &ControlSignal,
) -> Result<f64> {
    let (s, d) = (&pair.s_picture.dynamics, &pair.d_picture.dynamics);
    if s.state_dim != traj.state_dim() || d.state_dim != traj.state_dim() {
        return Err(Error::dims("pictures and trajectory differ in state dimension"));
    }
    if u.grid != traj.grid || v.grid != traj.grid {
        return Err(Error::dims("signals must share the trajectory grid"));
    }
    if u.dim() != s.control_dim || v.dim() != d.control_dim {
        return Err(Error::dims(format!(
            "signals have dimensions ({}, {}), pictures expect ({}, {})",
            u.dim(),
            v.dim(),
            s.control_dim,
            d.control_dim
        )));
    }
    let per_node = (0..traj.len())
        .into_par_iter()
        .map(|n| {
            let a = evaluate_rhs(s, &traj.states[n], &u.values[n])?;
            let b = evaluate_rhs(d, &traj.states[n], &v.values[n])?;
            Ok(a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_node.into_iter().fold(0.0, f64::max))
}

/// Adds a subsidiary term to the D-picture's hidden parameters; dynamics and
/// couplings are carried over untouched.
///
/// A term with a wider secondary argument widens the map (the new inputs enter
/// with exponent zero in the existing terms).
pub fn add_agent(d: &PictureModel, new_agent_term: &Expansion) -> Result<PictureModel> {
    if d.role != PictureRole::Desires {
        return Err(Error::invalid("agents are added to a D-picture"));
    }
    let map = d
        .hidden_parameter_map
        .as_ref()
        .ok_or_else(|| Error::MissingInput("D-picture has no hidden parameter map".into()))?;
    new_agent_term.validate()?;
    if new_agent_term.x_dim != map.map.x_dim || new_agent_term.out_dim() != map.map.out_dim() {
        return Err(Error::dims(format!(
            "term maps (phi: {}) to {} outputs, hidden map has (phi: {}) and {} outputs",
            new_agent_term.x_dim,
            new_agent_term.out_dim(),
            map.map.x_dim,
            map.map.out_dim()
        )));
    }
    let y = map.map.y_dim.max(new_agent_term.y_dim);
    let merged = map.map.padded(y)?.sum(&new_agent_term.padded(y)?)?;
    Ok(PictureModel {
        hidden_parameter_map: Some(HiddenParameterMap {
            map: merged,
            residual: map.residual,
        }),
        ..d.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, TimeGrid};
    use crate::epsilon::recover_epsilon;
    use crate::expansion::BasisTerm;
    use crate::filtration::{FilterPrimitive, SignalSelector};

    /// `phi_i' = -phi_i + u_i`, `u = u° + ε`, `u°` the smoothed control.
    fn game(n_subjects: usize, u: impl Fn(f64) -> Vec<f64>) -> (PictureModel, Trajectory) {
        let d = n_subjects;
        let mut model = DynamicsModel::zeros(d, d, vec![]);
        for i in 0..d {
            model.set(i, BasisTerm::state(i, d, d), -1.0);
            model.set(i, BasisTerm::control(i, d, d), 1.0);
        }
        let g = TimeGrid::new(0.0, 0.01, 600).unwrap();
        let sig = ControlSignal::new(g, g.times().into_iter().map(&u).collect(), SignalRole::Interactive)
            .unwrap();
        let traj = integrate(&model, &vec![0.5; d], Some(&sig), &g).unwrap();
        let filters = (0..d)
            .map(|i| {
                FiltrationSpec::new(
                    vec![SignalSelector::component(SignalSource::Control, i)],
                    vec![FilterPrimitive::MovingAverage { window: 40 }],
                )
            })
            .collect();
        let s = PictureModel::subjects(model, CouplingForm::additive(d, &vec![1; d]), filters).unwrap();
        (s, traj)
    }

    fn eps_of(s: &PictureModel, traj: &Trajectory) -> EpsilonRepresentation {
        let u = traj.control_signal(SignalRole::Interactive).unwrap();
        let dummy = EpsilonRepresentation {
            coupling: s.coupling.clone(),
            epsilon: ControlSignal::zeros(traj.grid, s.coupling.epsilon_dim(), SignalRole::Epsilon),
            recovery_residual: 0.0,
        };
        let pure = s.pure_controls(traj, &dummy).unwrap();
        recover_epsilon(&s.coupling, &u, &pure, traj, 1e-12).unwrap()
    }

    fn identity_desire() -> Vec<FiltrationSpec> {
        vec![FiltrationSpec::new(
            vec![SignalSelector::all(SignalSource::Epsilon)],
            vec![FilterPrimitive::MovingAverage { window: 1 }],
        )]
    }

    fn wiggle(t: f64) -> Vec<f64> {
        vec![(0.7 * t).sin() + 0.3 * (9.0 * t).cos()]
    }

    #[test]
    fn identity_desire_absorbs_pure_control() {
        let (s, traj) = game(1, wiggle);
        let eps = eps_of(&s, &traj);
        let dp = sd_transform(&s, &identity_desire(), &eps, &traj).unwrap();
        let map = &dp.hidden_parameter_map.as_ref().unwrap().map;
        // ε~ = u - ε = u°: coefficient 1 on the pure input, 0 elsewhere
        for (t, c) in map.terms.iter().zip(&map.coefficients[0]) {
            let want = if *t == BasisTerm::control(0, 1, 1) { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-9, "{t}: {c}");
        }
        assert_eq!(dp.dynamics, s.dynamics);
        let v = sd_replay(&s, &dp, &traj, &eps).unwrap();
        let u = traj.control_signal(SignalRole::Interactive).unwrap();
        let pair = SDPair::new(s, dp, &traj, &u, &v).unwrap();
        assert!(pair.consistency_residual <= 1e-9, "{}", pair.consistency_residual);
    }

    #[test]
    fn quiet_desire_reduces_to_pure_replay() {
        let (s, traj) = game(1, |_| vec![0.0]);
        let eps = eps_of(&s, &traj);
        assert!(eps.epsilon.values.iter().all(|e| e[0] == 0.0));
        let dp = sd_transform(&s, &identity_desire(), &eps, &traj).unwrap();
        let v = sd_replay(&s, &dp, &traj, &eps).unwrap();
        let u = traj.control_signal(SignalRole::Interactive).unwrap();
        let r = sd_consistency(&SDPair { s_picture: s, d_picture: dp, consistency_residual: 0.0 }, &traj, &u, &v)
            .unwrap();
        assert!(r <= 1e-12);
    }

    #[test]
    fn empty_desires_rejected() {
        let (s, traj) = game(1, wiggle);
        let eps = eps_of(&s, &traj);
        assert!(matches!(
            sd_transform(&s, &[], &eps, &traj),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn consistency_detects_perturbed_dynamics() {
        let (s, traj) = game(1, wiggle);
        let u = traj.control_signal(SignalRole::Interactive).unwrap();
        let same = SDPair { s_picture: s.clone(), d_picture: s.clone(), consistency_residual: 0.0 };
        assert_eq!(sd_consistency(&same, &traj, &u, &u).unwrap(), 0.0);
        let mut other = s.clone();
        other.dynamics.set(0, BasisTerm::state(0, 1, 1), 0.0);
        let pert = SDPair { s_picture: s, d_picture: other, consistency_residual: 0.0 };
        assert!(sd_consistency(&pert, &traj, &u, &u).unwrap() > 0.0);
        let short = ControlSignal::zeros(traj.grid, 2, SignalRole::Interactive);
        assert!(matches!(
            sd_consistency(&pert, &traj, &u, &short),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn zero_agent_is_identity() {
        let (s, traj) = game(1, wiggle);
        let eps = eps_of(&s, &traj);
        let dp = sd_transform(&s, &identity_desire(), &eps, &traj).unwrap();
        let zero = Expansion::zeros(1, 1, 1);
        assert_eq!(add_agent(&dp, &zero).unwrap(), dp);
        let bad = Expansion::zeros(2, 1, 1);
        assert!(matches!(add_agent(&dp, &bad), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn second_subject_term_restores_consistency() {
        let (s, idle) = game(2, |t| vec![(0.7 * t).sin() + 0.3 * (9.0 * t).cos(), 0.0]);
        let eps_idle = eps_of(&s, &idle);
        let desires = identity_desire();
        let dp = sd_transform(&s, &desires, &eps_idle, &idle).unwrap();

        let (_, active) = game(2, |t| {
            vec![(0.7 * t).sin() + 0.3 * (9.0 * t).cos(), 0.5 + (1.3 * t).cos()]
        });
        let eps = eps_of(&s, &active);
        let u = active.control_signal(SignalRole::Interactive).unwrap();
        let residual = |p: &PictureModel| {
            let v = sd_replay(&s, p, &active, &eps).unwrap();
            sd_consistency(
                &SDPair { s_picture: s.clone(), d_picture: p.clone(), consistency_residual: 0.0 },
                &active,
                &u,
                &v,
            )
            .unwrap()
        };
        let mut term = Expansion::zeros(2, 2, 2);
        term.add(1, BasisTerm::control(1, 2, 2), 1.0);
        let extended = add_agent(&dp, &term).unwrap();
        assert_eq!(extended.dynamics, dp.dynamics);
        assert_eq!(extended.coupling, dp.coupling);
        let (before, after) = (residual(&dp), residual(&extended));
        assert!(after < before, "{after} vs {before}");
        assert!(after < 1e-9);
    }
}
