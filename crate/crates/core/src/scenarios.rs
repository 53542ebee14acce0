//! Ground-truth interactive games with known pure controls, couplings and feedbacks.

use std::cell::RefCell;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detection::Candidate;
use crate::dynamics::{integrate_closed_loop, ControlSignal, DynamicsModel, SignalRole, TimeGrid, Trajectory};
use crate::epsilon::{CouplingChannel, CouplingForm, EpsilonRepresentation};
use crate::error::{Error, Result};
use crate::expansion::BasisTerm;
use crate::filtration::{FilterPrimitive, FiltrationSpec, SignalSelector, SignalSource};
use crate::goal::GoalFunctional;

/// Smooth switch-on: 0 before `onset`, a raised-cosine rise over `rise`, then 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub onset: f64,
    pub rise: f64,
}

impl Envelope {
    pub fn at(&self, t: f64) -> f64 {
        if t <= self.onset {
            0.0
        } else if t >= self.onset + self.rise {
            1.0
        } else {
            0.5 * (1.0 - (PI * (t - self.onset) / self.rise).cos())
        }
    }
}

/// Closed-form pure control `u°(t) = offset + slope * t`, per component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurePolicy {
    pub offset: Vec<f64>,
    pub slope: Vec<f64>,
}

impl PurePolicy {
    pub fn constant(values: &[f64]) -> Self {
        Self {
            offset: values.to_vec(),
            slope: vec![0.0; values.len()],
        }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        self.offset.iter().zip(&self.slope).map(|(a, b)| a + b * t).collect()
    }
}

/// One feedback process, written into ε component `channel`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsilonProcess {
    /// `A sin(2πt / period)` under an envelope.
    Tremor {
        amplitude: f64,
        period: f64,
        envelope: Envelope,
    },
    /// `gain * sin²(πt / period) * (phi_leader - phi_follower)`: attention in bursts.
    BurstFeedback {
        gain: f64,
        leader: usize,
        follower: usize,
        period: f64,
        envelope: Envelope,
    },
    /// Raised-cosine pulses that close the gap `phi_target - phi_eye` whenever it
    /// exceeds `bound` and no pulse is running.
    Saccade {
        eye: usize,
        target: usize,
        bound: f64,
        duration: f64,
    },
    /// `level + slope * t` under an envelope.
    Ramp {
        level: f64,
        slope: f64,
        envelope: Envelope,
    },
    /// Sum of `modes` sinusoids with seeded amplitudes, frequencies and phases.
    SmoothNoise {
        amplitude: f64,
        modes: usize,
        max_frequency: f64,
        envelope: Envelope,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonTerm {
    pub channel: usize,
    pub process: EpsilonProcess,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub grid: TimeGrid,
    pub initial_state: Vec<f64>,
    pub dynamics: DynamicsModel,
    pub coupling: CouplingForm,
    pub policy: PurePolicy,
    pub epsilon: Vec<EpsilonTerm>,
    /// The (F, coupling, K) that generated the data.
    pub generating: Candidate,
    pub decoys: Vec<Candidate>,
    /// Menus for unraveling levels 1, 2, ... of the recovered ε.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unravel_menus: Vec<Vec<Candidate>>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.dynamics.validate()?;
        self.coupling.validate()?;
        let d = self.dynamics.state_dim;
        if self.initial_state.len() != d || self.coupling.state_dim != d {
            return Err(Error::dims("initial state or coupling does not match the dynamics"));
        }
        if self.coupling.control_dim() != self.dynamics.control_dim
            || self.policy.dim() != self.coupling.control_dim()
            || self.policy.slope.len() != self.policy.offset.len()
        {
            return Err(Error::dims("policy, coupling and dynamics disagree on control dimension"));
        }
        let e = self.coupling.epsilon_dim();
        for term in &self.epsilon {
            if term.channel >= e {
                return Err(Error::dims(format!("ε channel {} of {e}", term.channel)));
            }
            match term.process {
                EpsilonProcess::BurstFeedback { leader, follower, .. } if leader.max(follower) >= d => {
                    return Err(Error::dims("burst feedback reads a missing state component"));
                }
                EpsilonProcess::Saccade { eye, target, duration, .. } => {
                    if eye.max(target) >= d {
                        return Err(Error::dims("saccade reads a missing state component"));
                    }
                    if !(duration > 0.0) {
                        return Err(Error::invalid("saccade duration must be positive"));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Generating candidate first, then the decoys.
    pub fn menu(&self) -> Vec<Candidate> {
        std::iter::once(self.generating.clone())
            .chain(self.decoys.iter().cloned())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub trajectory: Trajectory,
    pub control: ControlSignal,
    pub pure: ControlSignal,
    pub epsilon: EpsilonRepresentation,
}

#[derive(Clone, Copy, Debug)]
struct Pulse {
    start: f64,
    amplitude: f64,
}

/// Running state of the feedback processes: active pulses and drawn noise modes.
struct ProcessState {
    pulses: Vec<Option<Pulse>>,
    noise: Vec<Vec<(f64, f64, f64)>>,
}

impl ProcessState {
    fn new(terms: &[EpsilonTerm], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = terms
            .iter()
            .map(|t| match t.process {
                EpsilonProcess::SmoothNoise { modes, max_frequency, .. } => (0..modes)
                    .map(|_| {
                        (
                            rng.random_range(-1.0..1.0),
                            rng.random_range(0.1..=1.0) * max_frequency,
                            rng.random_range(0.0..2.0 * PI),
                        )
                    })
                    .collect(),
                _ => Vec::new(),
            })
            .collect();
        Self {
            pulses: vec![None; terms.len()],
            noise,
        }
    }

    /// Starts pulses at node time `t` for saccade terms whose gap exceeds the bound.
    fn at_node(&mut self, terms: &[EpsilonTerm], t: f64, x: &[f64]) {
        for (i, term) in terms.iter().enumerate() {
            if let EpsilonProcess::Saccade { eye, target, bound, duration } = term.process {
                if matches!(self.pulses[i], Some(p) if t >= p.start + duration) {
                    self.pulses[i] = None;
                }
                let gap = x[target] - x[eye];
                if self.pulses[i].is_none() && gap.abs() > bound {
                    // integral of the raised cosine is amplitude * duration / 2
                    self.pulses[i] = Some(Pulse {
                        start: t,
                        amplitude: 2.0 * gap / duration,
                    });
                }
            }
        }
    }

    fn eval(&self, terms: &[EpsilonTerm], eps_dim: usize, t: f64, x: &[f64]) -> Vec<f64> {
        let mut e = vec![0.0; eps_dim];
        for (i, term) in terms.iter().enumerate() {
            e[term.channel] += match term.process {
                EpsilonProcess::Tremor { amplitude, period, envelope } => {
                    envelope.at(t) * amplitude * (2.0 * PI * t / period).sin()
                }
                EpsilonProcess::BurstFeedback { gain, leader, follower, period, envelope } => {
                    let burst = (PI * t / period).sin().powi(2);
                    envelope.at(t) * burst * gain * (x[leader] - x[follower])
                }
                EpsilonProcess::Saccade { duration, .. } => match self.pulses[i] {
                    Some(p) if t >= p.start && t <= p.start + duration => {
                        0.5 * p.amplitude * (1.0 - (2.0 * PI * (t - p.start) / duration).cos())
                    }
                    _ => 0.0,
                },
                EpsilonProcess::Ramp { level, slope, envelope } => envelope.at(t) * (level + slope * t),
                EpsilonProcess::SmoothNoise { amplitude, envelope, .. } => {
                    let s: f64 = self.noise[i]
                        .iter()
                        .map(|(a, w, ph)| a * (w * t + ph).sin())
                        .sum();
                    envelope.at(t) * amplitude * s
                }
            };
        }
        e
    }
}

/// Simulates the game: pure policy, feedback processes, coupling, RK4 closed loop.
pub fn generate(scenario: &Scenario, seed: u64) -> Result<Generated> {
    scenario.validate()?;
    let grid = scenario.grid;
    let terms = &scenario.epsilon;
    let eps_dim = scenario.coupling.epsilon_dim();
    let state = RefCell::new(ProcessState::new(terms, seed));
    let recorded = RefCell::new((Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len())));
    let traj = integrate_closed_loop(
        &scenario.dynamics,
        &scenario.initial_state,
        &grid,
        |t, x| {
            let pure = scenario.policy.at(t);
            let e = state.borrow().eval(terms, eps_dim, t, x);
            scenario.coupling.compose(x, &pure, &e)
        },
        |k, x| {
            let t = grid.time(k);
            state.borrow_mut().at_node(terms, t, x);
            let e = state.borrow().eval(terms, eps_dim, t, x);
            let mut rec = recorded.borrow_mut();
            rec.0.push(scenario.policy.at(t));
            rec.1.push(e);
        },
    )?;
    let (pure, eps) = recorded.into_inner();
    let control = ControlSignal::new(
        grid,
        traj.controls.clone().unwrap_or_default(),
        SignalRole::Interactive,
    )?;
    Ok(Generated {
        control,
        pure: ControlSignal::new(grid, pure, SignalRole::Pure)?,
        epsilon: EpsilonRepresentation {
            coupling: scenario.coupling.clone(),
            epsilon: ControlSignal::new(grid, eps, SignalRole::Epsilon)?,
            recovery_residual: 0.0,
        },
        trajectory: traj,
    })
}

fn candidate(label: &str, filtration: FiltrationSpec, coupling: &CouplingForm, goal: GoalFunctional) -> Candidate {
    Candidate {
        label: label.to_string(),
        filtration,
        coupling: coupling.clone(),
        goal,
    }
}

fn of_controls(p: FilterPrimitive) -> FiltrationSpec {
    FiltrationSpec::of(SignalSource::Control, p)
}

fn grid() -> TimeGrid {
    TimeGrid {
        t0: 0.0,
        dt: 0.01,
        n_steps: 1000,
    }
}

fn model(d: usize, k: usize, entries: &[(usize, BasisTerm, f64)]) -> DynamicsModel {
    let mut m = DynamicsModel::zeros(d, k, vec![]);
    for (row, term, v) in entries {
        m.set(*row, term.clone(), *v);
    }
    m
}

/// `phi' = u` with nothing happening.
pub fn still_point() -> Scenario {
    let coupling = CouplingForm::additive(1, &[1]);
    let goal = |r: f64| GoalFunctional::tracking(&[r]);
    Scenario {
        name: "still-point".into(),
        description: "phi' = u with u° = 0 and ε = 0: a system at rest".into(),
        grid: grid(),
        initial_state: vec![0.5],
        dynamics: model(1, 1, &[(0, BasisTerm::control(0, 1, 1), 1.0)]),
        coupling: coupling.clone(),
        policy: PurePolicy::constant(&[0.0]),
        epsilon: vec![],
        generating: candidate(
            "rest",
            of_controls(FilterPrimitive::MovingAverage { window: 50 }),
            &coupling,
            goal(0.5),
        ),
        decoys: vec![
            candidate(
                "drift-up",
                of_controls(FilterPrimitive::ExponentialSmoothing { rate: 0.05 }),
                &coupling,
                goal(1.5),
            ),
            candidate(
                "drift-down",
                of_controls(FilterPrimitive::Median { window: 11 }),
                &coupling,
                goal(-0.5),
            ),
        ],
        unravel_menus: vec![],
    }
}

/// `phi' = -phi + u`, pure control 1, a tremor switching on at t = 2.5.
pub fn linear_relaxation() -> Scenario {
    let coupling = CouplingForm::additive(1, &[1]);
    Scenario {
        name: "linear-relaxation".into(),
        description: "phi' = -phi + u, u° = 1, ε a 2 Hz tremor switching on after t = 2.5".into(),
        grid: grid(),
        initial_state: vec![0.0],
        dynamics: model(
            1,
            1,
            &[
                (0, BasisTerm::state(0, 1, 1), -1.0),
                (0, BasisTerm::control(0, 1, 1), 1.0),
            ],
        ),
        coupling: coupling.clone(),
        policy: PurePolicy::constant(&[1.0]),
        epsilon: vec![EpsilonTerm {
            channel: 0,
            process: EpsilonProcess::Tremor {
                amplitude: 0.2,
                period: 0.5,
                envelope: Envelope { onset: 2.5, rise: 1.0 },
            },
        }],
        generating: candidate(
            "settle-at-one",
            of_controls(FilterPrimitive::MovingAverage { window: 50 }),
            &coupling,
            GoalFunctional::tracking(&[1.0]),
        ),
        decoys: vec![
            candidate(
                "smoothed-effort",
                of_controls(FilterPrimitive::ExponentialSmoothing { rate: 0.05 }),
                &coupling,
                GoalFunctional::effort(1),
            ),
            candidate(
                "raw-to-zero",
                of_controls(FilterPrimitive::Median { window: 5 }),
                &coupling,
                GoalFunctional::tracking(&[0.0]),
            ),
        ],
        unravel_menus: vec![],
    }
}

/// Chaser `x' = u` after a target `p' = c`; the chaser matches the target speed
/// and corrects the gap in bursts of attention.
pub fn pursuit() -> Scenario {
    let c = 0.5;
    let coupling = CouplingForm::additive(2, &[1]);
    let target_speed = FiltrationSpec::new(
        vec![SignalSelector::component(SignalSource::State, 1)],
        vec![FilterPrimitive::FiniteDifference],
    );
    Scenario {
        name: "pursuit".into(),
        description: "x' = u, p' = c; u° = c, ε = bursts of gap feedback".into(),
        grid: grid(),
        initial_state: vec![-2.0, 0.0],
        dynamics: model(
            2,
            1,
            &[
                (0, BasisTerm::control(0, 2, 1), 1.0),
                (1, BasisTerm::constant(2, 1), c),
            ],
        ),
        coupling: coupling.clone(),
        policy: PurePolicy::constant(&[c]),
        epsilon: vec![EpsilonTerm {
            channel: 0,
            process: EpsilonProcess::BurstFeedback {
                gain: 0.6,
                leader: 1,
                follower: 0,
                period: 2.0,
                envelope: Envelope { onset: 2.5, rise: 1.0 },
            },
        }],
        generating: candidate("match-target", target_speed, &coupling, GoalFunctional::gap(2, 0, 1, 0.0)),
        decoys: vec![
            candidate(
                "smoothed-command",
                of_controls(FilterPrimitive::MovingAverage { window: 50 }),
                &coupling,
                GoalFunctional::effort(2),
            ),
            candidate(
                "slow-command",
                of_controls(FilterPrimitive::ExponentialSmoothing { rate: 0.02 }),
                &coupling,
                GoalFunctional::tracking(&[0.0, 0.0]),
            ),
        ],
        unravel_menus: vec![],
    }
}

fn saccade_decoys(coupling: &CouplingForm, d: usize) -> Vec<Candidate> {
    vec![
        candidate(
            "smeared-drift",
            of_controls(FilterPrimitive::MovingAverage { window: 51 }),
            coupling,
            GoalFunctional::effort(d),
        ),
        candidate(
            "lagged-drift",
            of_controls(FilterPrimitive::ExponentialSmoothing { rate: 0.02 }),
            coupling,
            GoalFunctional::tracking(&vec![0.0; d]),
        ),
    ]
}

/// Gaze `g' = u` following an image point `p' = 1`: slow drift plus corrective jumps.
pub fn saccade() -> Scenario {
    let coupling = CouplingForm::additive(2, &[1]);
    Scenario {
        name: "saccade".into(),
        description: "g' = u, p' = 1; u° = 0.8 slow drift, ε = jumps when |p - g| > 0.3".into(),
        grid: grid(),
        initial_state: vec![0.2, 0.0],
        dynamics: model(
            2,
            1,
            &[
                (0, BasisTerm::control(0, 2, 1), 1.0),
                (1, BasisTerm::constant(2, 1), 1.0),
            ],
        ),
        coupling: coupling.clone(),
        policy: PurePolicy::constant(&[0.8]),
        epsilon: vec![EpsilonTerm {
            channel: 0,
            process: EpsilonProcess::Saccade {
                eye: 0,
                target: 1,
                bound: 0.3,
                duration: 0.3,
            },
        }],
        generating: candidate(
            "drift-and-jump",
            of_controls(FilterPrimitive::Median { window: 81 }),
            &coupling,
            GoalFunctional::gap(2, 0, 1, 0.0),
        ),
        decoys: saccade_decoys(&coupling, 2),
        unravel_menus: vec![],
    }
}

/// Two observers sharing one image point.
pub fn saccade_duo() -> Scenario {
    let coupling = CouplingForm::additive(3, &[1, 1]);
    let mut goal = GoalFunctional::gap(3, 0, 2, 0.0);
    goal.running_cost = goal
        .running_cost
        .sum(&GoalFunctional::gap(3, 1, 2, 0.0).running_cost)
        .expect("same arity");
    Scenario {
        name: "saccade-duo".into(),
        description: "g1' = u1, g2' = u2, p' = 1; two drifting observers with their own jump bounds".into(),
        grid: grid(),
        initial_state: vec![0.2, 0.15, 0.0],
        dynamics: model(
            3,
            2,
            &[
                (0, BasisTerm::control(0, 3, 2), 1.0),
                (1, BasisTerm::control(1, 3, 2), 1.0),
                (2, BasisTerm::constant(3, 2), 1.0),
            ],
        ),
        coupling: coupling.clone(),
        policy: PurePolicy::constant(&[0.8, 0.7]),
        epsilon: vec![
            EpsilonTerm {
                channel: 0,
                process: EpsilonProcess::Saccade { eye: 0, target: 2, bound: 0.3, duration: 0.3 },
            },
            EpsilonTerm {
                channel: 1,
                process: EpsilonProcess::Saccade { eye: 1, target: 2, bound: 0.25, duration: 0.3 },
            },
        ],
        generating: candidate(
            "drift-and-jump",
            of_controls(FilterPrimitive::Median { window: 81 }),
            &coupling,
            goal,
        ),
        decoys: saccade_decoys(&coupling, 3),
        unravel_menus: vec![],
    }
}

/// The five built-in scenarios.
pub fn builtin_catalog() -> Vec<Scenario> {
    vec![still_point(), linear_relaxation(), pursuit(), saccade(), saccade_duo()]
}

/// Pursuit whose feedback is itself a clean desire (a slow ramp with nothing
/// hidden behind it), so unraveling stops at the second level.
pub fn two_stage() -> Scenario {
    let mut s = pursuit();
    s.name = "two-stage".into();
    s.description = "x' = u, p' = c; u° = c, ε = a smooth ramp desire with no further feedback".into();
    s.epsilon = vec![EpsilonTerm {
        channel: 0,
        process: EpsilonProcess::Ramp {
            level: -0.2,
            slope: 0.1,
            envelope: Envelope { onset: 2.5, rise: 2.0 },
        },
    }];
    let level = CouplingForm::additive(2, &[1]);
    s.unravel_menus = vec![vec![
        candidate(
            "desire-itself",
            of_controls(FilterPrimitive::MovingAverage { window: 1 }),
            &level,
            GoalFunctional::gap(2, 0, 1, 0.0),
        ),
        candidate(
            "lagging-desire",
            of_controls(FilterPrimitive::MovingAverage { window: 100 }),
            &level,
            GoalFunctional::effort(2),
        ),
        candidate(
            "ignored-desire",
            of_controls(FilterPrimitive::DeadBand { threshold: 10.0 }),
            &level,
            GoalFunctional::tracking(&[0.0, 0.0]),
        ),
    ]];
    s
}

/// Multiplicative coupling `u = u° ε` whose pure control crosses zero at t = 1.
pub fn singular() -> Scenario {
    let coupling = CouplingForm {
        state_dim: 1,
        channels: vec![CouplingChannel::multiplicative(1)],
    };
    let mut s = linear_relaxation();
    s.name = "singular".into();
    s.description = "phi' = -phi + u, u = u° ε with u° = t - 1 vanishing at node 100".into();
    s.coupling = coupling.clone();
    s.policy = PurePolicy {
        offset: vec![-1.0],
        slope: vec![1.0],
    };
    if let Some(EpsilonProcess::Tremor { amplitude, .. }) = s.epsilon.first_mut().map(|t| &mut t.process) {
        *amplitude = 0.5;
    }
    s.epsilon.push(EpsilonTerm {
        channel: 0,
        process: EpsilonProcess::Ramp {
            level: 1.0,
            slope: 0.0,
            envelope: Envelope { onset: -1.0, rise: 0.5 },
        },
    });
    s.generating.coupling = coupling.clone();
    for d in &mut s.decoys {
        d.coupling = coupling.clone();
    }
    s
}

/// Extra fixtures outside the catalog.
pub fn extra_fixtures() -> Vec<Scenario> {
    vec![two_stage(), singular()]
}

/// Looks up a catalog scenario or extra fixture by name.
pub fn resolve_scenario(name: &str) -> Option<Scenario> {
    builtin_catalog()
        .into_iter()
        .chain(extra_fixtures())
        .find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_names() {
        let names: Vec<String> = builtin_catalog().into_iter().map(|s| s.name).collect();
        assert_eq!(
            names,
            ["still-point", "linear-relaxation", "pursuit", "saccade", "saccade-duo"]
        );
        assert!(resolve_scenario("two-stage").is_some());
        assert!(resolve_scenario("nope").is_none());
    }

    #[test]
    fn still_point_stays_put() {
        let g = generate(&still_point(), 0).unwrap();
        assert!(g.trajectory.states.iter().all(|x| x == &vec![0.5]));
    }

    #[test]
    fn catalog_round_trips_through_json() {
        for s in builtin_catalog().into_iter().chain(extra_fixtures()) {
            let text = serde_json::to_string(&s).unwrap();
            let back: Scenario = serde_json::from_str(&text).unwrap();
            assert_eq!(back, s, "{}", s.name);
        }
    }

    #[test]
    fn envelope_is_continuous() {
        let e = Envelope { onset: 1.0, rise: 2.0 };
        assert_eq!(e.at(0.5), 0.0);
        assert!((e.at(2.0) - 0.5).abs() < 1e-15);
        assert_eq!(e.at(3.5), 1.0);
    }

    #[test]
    fn saccade_jumps_match_crossings() {
        let s = saccade();
        let g = generate(&s, 0).unwrap();
        let gap: Vec<f64> = g.trajectory.states.iter().map(|x| (x[1] - x[0]).abs()).collect();
        let crossings = gap.windows(2).filter(|w| w[0] <= 0.3 && w[1] > 0.3).count();
        let eps: Vec<f64> = g.epsilon.epsilon.values.iter().map(|e| e[0]).collect();
        let jumps = eps.windows(2).filter(|w| w[0] == 0.0 && w[1] != 0.0).count();
        assert!(jumps >= 3, "{jumps}");
        assert_eq!(jumps, crossings);
    }
}
