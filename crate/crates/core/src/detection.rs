//! Detection of hidden interactivity from a recorded history.
//!
//! The pipeline: fit candidate dynamics, test whether an autonomous model explains
//! the record, and rank (filtration, coupling, goal) hypotheses by how well they
//! predict a held-out suffix of the history.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    estimate_derivatives, evaluate_rhs, integrate_closed_loop, ControlSignal, DynamicsModel,
    Trajectory,
};
use crate::epsilon::{recover_epsilon, recover_epsilon_lenient, CouplingForm};
use crate::error::{Error, Result};
use crate::expansion::{monomial_dictionary, BasisTerm, Expansion};
use crate::filtration::{apply_filtration, FiltrationSpec, SignalSet};
use crate::goal::{evaluate_goal, GoalFunctional};
use crate::linalg::{linear_trend, median};
use crate::regression::fit_expansion;

/// Regresses estimated derivatives on the dictionary with iterated hard thresholding.
///
/// Returns the model and the root-mean-square derivative mismatch.
pub fn fit_dynamics(
    traj: &Trajectory,
    dictionary: &[BasisTerm],
    use_controls: bool,
    ridge: f64,
    sparsify_threshold: f64,
) -> Result<(DynamicsModel, f64)> {
    if !(ridge >= 0.0) || !(sparsify_threshold >= 0.0) {
        return Err(Error::invalid("ridge and sparsify threshold must be >= 0"));
    }
    let n = traj.len();
    if n < dictionary.len() + 2 {
        return Err(Error::InsufficientData(format!(
            "{n} nodes for {} dictionary terms (need at least {})",
            dictionary.len(),
            dictionary.len() + 2
        )));
    }
    let d = traj.state_dim();
    let k = if use_controls {
        traj.controls
            .as_ref()
            .ok_or_else(|| Error::MissingInput("controls requested but not recorded".into()))?;
        traj.control_dim()
    } else {
        0
    };
    if let Some(t) = dictionary.iter().find(|t| t.x_dim() != d || t.y_dim() != k) {
        return Err(Error::dims(format!(
            "dictionary term {t} does not take (state: {d}, control: {k}) arguments"
        )));
    }
    let derivs = estimate_derivatives(traj)?;
    let ys: Vec<Vec<f64>> = if use_controls {
        traj.controls.clone().unwrap_or_default()
    } else {
        vec![Vec::new(); n]
    };
    let fit = fit_expansion(
        &traj.states,
        &ys,
        &derivs,
        dictionary,
        d,
        k,
        ridge,
        sparsify_threshold,
    )?;
    Ok((DynamicsModel::from_expansion(fit.expansion), fit.rms))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Autonomous,
    HiddenInputs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionVerdict {
    /// Root-mean-square of the per-node residuals.
    pub residual_norm: f64,
    pub per_node_residuals: Vec<f64>,
    pub verdict: Verdict,
    pub threshold_used: f64,
}

/// Compares estimated derivatives with an autonomous model node by node.
pub fn detect_hidden_inputs(
    traj: &Trajectory,
    autonomous_model: &DynamicsModel,
    threshold: f64,
) -> Result<DetectionVerdict> {
    if autonomous_model.control_dim != 0 {
        return Err(Error::dims("hidden-input test needs an autonomous model"));
    }
    if autonomous_model.state_dim != traj.state_dim() {
        return Err(Error::dims(format!(
            "model state dimension {} vs trajectory {}",
            autonomous_model.state_dim,
            traj.state_dim()
        )));
    }
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::invalid("threshold must be a non-negative number"));
    }
    let derivs = estimate_derivatives(traj)?;
    let mut per_node = Vec::with_capacity(traj.len());
    for (x, dx) in traj.states.iter().zip(&derivs) {
        let f = evaluate_rhs(autonomous_model, x, &[])?;
        per_node.push(
            f.iter()
                .zip(dx)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
        );
    }
    let residual_norm =
        (per_node.iter().map(|r| r * r).sum::<f64>() / per_node.len() as f64).sqrt();
    let verdict = if residual_norm > threshold {
        Verdict::HiddenInputs
    } else {
        Verdict::Autonomous
    };
    Ok(DetectionVerdict {
        residual_norm,
        per_node_residuals: per_node,
        verdict,
        threshold_used: threshold,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    /// Maximum monomial degree of the autonomous dictionary.
    pub degree: u32,
    pub ridge: f64,
    pub sparsify_threshold: f64,
    /// Fraction of the record used to calibrate the residual level.
    pub calibration_fraction: f64,
    /// Threshold = this multiple of the calibration median residual.
    pub threshold_multiple: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            degree: 3,
            ridge: 0.0,
            sparsify_threshold: 0.0,
            calibration_fraction: 0.2,
            threshold_multiple: 5.0,
        }
    }
}

/// A multiple of the median per-node residual of an autonomous fit on the
/// calibration prefix of the record.
pub fn default_threshold(
    traj: &Trajectory,
    dictionary: &[BasisTerm],
    cfg: &DetectionConfig,
) -> Result<f64> {
    let min_nodes = dictionary.len() + 2;
    let wanted = (cfg.calibration_fraction * traj.grid.n_steps as f64).floor() as usize;
    let end = wanted.max(min_nodes - 1).min(traj.grid.n_steps);
    let prefix = traj.slice(0, end)?;
    let (model, _) = fit_dynamics(&prefix, dictionary, false, cfg.ridge, cfg.sparsify_threshold)?;
    let mut res = detect_hidden_inputs(&prefix, &model, f64::INFINITY)?.per_node_residuals;
    Ok(cfg.threshold_multiple * median(&mut res))
}

/// Fits the autonomous model over the whole record and applies the default threshold.
pub fn detect_with_defaults(
    traj: &Trajectory,
    cfg: &DetectionConfig,
) -> Result<(DynamicsModel, DetectionVerdict)> {
    let dict = monomial_dictionary(traj.state_dim(), 0, cfg.degree);
    let (model, _) = fit_dynamics(traj, &dict, false, cfg.ridge, cfg.sparsify_threshold)?;
    let threshold = default_threshold(traj, &dict, cfg)?;
    let verdict = detect_hidden_inputs(traj, &model, threshold)?;
    Ok((model, verdict))
}

/// One (filtration, coupling, goal) hypothesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    #[serde(default)]
    pub label: String,
    pub filtration: FiltrationSpec,
    pub coupling: CouplingForm,
    pub goal: GoalFunctional,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub label: String,
    /// Root-mean-square state error over the held-out suffix; `None` when the
    /// candidate could not be evaluated.
    pub prediction_error: Option<f64>,
    pub optimality_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRanking {
    pub candidates: Vec<CandidateResult>,
    pub best_index: usize,
    /// Candidate indices from best to worst.
    pub order: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub holdout_fraction: f64,
    /// Degree of the controlled-dynamics dictionary over `(phi, u)`.
    pub degree: u32,
    pub ridge: f64,
    pub sparsify_threshold: f64,
    /// Degree of the fitted feedback law `ε ≈ E(phi, u°)`.
    pub feedback_degree: u32,
    /// Fraction of the training prefix (from its end) used to extrapolate pure controls.
    pub trend_fraction: f64,
    pub n_perturbations: usize,
    pub perturbation_scale: f64,
    pub seed: u64,
    pub singular_tolerance: f64,
    /// Prediction errors closer than `tie_tolerance * (1 + min error)` tie.
    pub tie_tolerance: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            holdout_fraction: 0.3,
            degree: 1,
            ridge: 0.0,
            sparsify_threshold: 0.02,
            feedback_degree: 1,
            trend_fraction: 0.1,
            n_perturbations: 32,
            perturbation_scale: 0.05,
            seed: 0,
            singular_tolerance: 1e-9,
            tie_tolerance: 1e-9,
        }
    }
}

/// Linear interpolation of a node series at time `t`.
pub(crate) fn interpolate(values: &[Vec<f64>], t0: f64, dt: f64, t: f64) -> Vec<f64> {
    let n = values.len();
    let s = ((t - t0) / dt).max(0.0);
    let k = (s.floor() as usize).min(n - 1);
    if k + 1 >= n {
        return values[n - 1].clone();
    }
    let w = s - k as f64;
    if w == 0.0 {
        return values[k].clone();
    }
    values[k]
        .iter()
        .zip(&values[k + 1])
        .map(|(a, b)| a + w * (b - a))
        .collect()
}

/// Replays the game from `traj`'s initial state with the given pure control and
/// an open-loop ε series.
fn resimulate(
    model: &DynamicsModel,
    coupling: &CouplingForm,
    traj: &Trajectory,
    pure: &[Vec<f64>],
    eps: &[Vec<f64>],
) -> Result<Trajectory> {
    let (t0, dt) = (traj.grid.t0, traj.grid.dt);
    integrate_closed_loop(
        model,
        &traj.states[0],
        &traj.grid,
        |t, x| {
            let p = interpolate(pure, t0, dt, t);
            let e = interpolate(eps, t0, dt, t);
            coupling.compose(x, &p, &e)
        },
        |_, _| {},
    )
}

/// Smooth random perturbation: a few low-frequency sine/cosine modes per component.
fn smooth_perturbation(rng: &mut ChaCha8Rng, n: usize, dim: usize, scale: f64) -> Vec<Vec<f64>> {
    const MODES: usize = 4;
    let coeffs: Vec<[(f64, f64); MODES]> = (0..dim)
        .map(|_| {
            let mut c = [(0.0, 0.0); MODES];
            for m in c.iter_mut() {
                *m = (StandardNormal.sample(rng), StandardNormal.sample(rng));
            }
            c
        })
        .collect();
    let norm = scale / (2.0 * MODES as f64).sqrt();
    (0..n)
        .map(|k| {
            let s = if n > 1 { k as f64 / (n - 1) as f64 } else { 0.0 };
            coeffs
                .iter()
                .map(|c| {
                    norm * c
                        .iter()
                        .enumerate()
                        .map(|(m, (a, b))| {
                            let w = (m + 1) as f64 * std::f64::consts::PI * s;
                            a * w.sin() + b * w.cos()
                        })
                        .sum::<f64>()
                })
                .collect()
        })
        .collect()
}

/// Fraction of seeded smooth perturbations of the pure control that strictly increase `K`.
#[allow(clippy::too_many_arguments)]
pub fn local_optimality_score(
    goal: &GoalFunctional,
    model: &DynamicsModel,
    coupling: &CouplingForm,
    pure_control: &ControlSignal,
    traj: &Trajectory,
    n_perturbations: usize,
    perturbation_scale: f64,
    seed: u64,
) -> Result<f64> {
    if n_perturbations == 0 {
        return Err(Error::InsufficientData("at least one perturbation is required".into()));
    }
    if !(perturbation_scale > 0.0) {
        return Err(Error::invalid("perturbation scale must be positive"));
    }
    if pure_control.grid != traj.grid || pure_control.dim() != coupling.control_dim() {
        return Err(Error::dims("pure control does not match trajectory grid or coupling"));
    }
    let eps = match &traj.controls {
        Some(u) => recover_epsilon_lenient(coupling, u, &pure_control.values, &traj.states)?,
        None => vec![vec![0.0; coupling.epsilon_dim()]; traj.len()],
    };
    let base = evaluate_goal(goal, &resimulate(model, coupling, traj, &pure_control.values, &eps)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worse = 0usize;
    for _ in 0..n_perturbations {
        let delta = smooth_perturbation(&mut rng, traj.len(), pure_control.dim(), perturbation_scale);
        let perturbed: Vec<Vec<f64>> = pure_control
            .values
            .iter()
            .zip(&delta)
            .map(|(p, d)| p.iter().zip(d).map(|(a, b)| a + b).collect())
            .collect();
        let k = evaluate_goal(goal, &resimulate(model, coupling, traj, &perturbed, &eps)?)?;
        if k > base {
            worse += 1;
        }
    }
    Ok(worse as f64 / n_perturbations as f64)
}

/// Holdout split node: training prefix is `0..=split`, test suffix `split..=n`.
pub fn holdout_split(n_steps: usize, holdout_fraction: f64) -> usize {
    ((1.0 - holdout_fraction) * n_steps as f64).floor() as usize
}

struct Shared<'a> {
    traj: &'a Trajectory,
    signals: SignalSet,
    model: DynamicsModel,
    split: usize,
    cfg: &'a SelectionConfig,
}

fn evaluate_candidate(sh: &Shared<'_>, cand: &Candidate) -> Result<(f64, f64)> {
    let traj = sh.traj;
    let cfg = sh.cfg;
    let d = traj.state_dim();
    let k = traj.control_dim();
    if cand.coupling.control_dim() != k || cand.coupling.state_dim != d {
        return Err(Error::dims(format!(
            "coupling has (state {}, control {}), record has ({d}, {k})",
            cand.coupling.state_dim,
            cand.coupling.control_dim()
        )));
    }
    let pure = apply_filtration(&cand.filtration, &sh.signals)?;
    if pure.dim() != k {
        return Err(Error::dims(format!(
            "filtration yields {} pure components for {k} controls",
            pure.dim()
        )));
    }
    let split = sh.split;
    let train = traj.slice(0, split)?;
    let u = traj
        .control_signal(crate::dynamics::SignalRole::Interactive)
        .ok_or_else(|| Error::MissingInput("controls".into()))?;
    let eps_train = recover_epsilon(
        &cand.coupling,
        &u.slice(0, split)?,
        &pure.slice(0, split)?,
        &train,
        cfg.singular_tolerance,
    )?;

    // feedback law ε ≈ E(phi, u°) on the training prefix
    let e_dim = cand.coupling.epsilon_dim();
    let law_dict = monomial_dictionary(d, k, cfg.feedback_degree);
    let law = if e_dim == 0 {
        Expansion::zeros(d, k, 0)
    } else {
        fit_expansion(
            &train.states,
            &pure.values[..=split],
            &eps_train.epsilon.values,
            &law_dict,
            d,
            k,
            cfg.ridge,
            0.0,
        )?
        .expansion
    };

    // slow-time extrapolation of the pure control from the end of the prefix
    let window = ((cfg.trend_fraction * split as f64).round() as usize).clamp(2, split + 1);
    let lo = split + 1 - window;
    let times: Vec<f64> = (lo..=split).map(|j| traj.grid.time(j)).collect();
    let t_split = traj.grid.time(split);
    let trends: Vec<(f64, f64)> = (0..k)
        .map(|c| {
            let v: Vec<f64> = (lo..=split).map(|j| pure.values[j][c]).collect();
            linear_trend(&times, &v, t_split)
        })
        .collect();
    let pure_at = |t: f64| -> Vec<f64> { trends.iter().map(|(a, b)| a + b * (t - t_split)).collect() };

    let test_grid = traj.grid.slice(split, traj.grid.n_steps)?;
    let predicted = integrate_closed_loop(
        &sh.model,
        &traj.states[split],
        &test_grid,
        |t, x| {
            let p = pure_at(t);
            let e = law.eval(x, &p);
            cand.coupling.compose(x, &p, &e)
        },
        |_, _| {},
    )?;
    let mut sq = 0.0;
    for (j, x) in predicted.states.iter().enumerate() {
        let obs = &traj.states[split + j];
        sq += x.iter().zip(obs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    let error = (sq / predicted.len() as f64).sqrt();
    if !error.is_finite() {
        return Err(Error::NonFiniteState { node: split });
    }

    let score = local_optimality_score(
        &cand.goal,
        &sh.model,
        &cand.coupling,
        &pure,
        traj,
        cfg.n_perturbations,
        cfg.perturbation_scale,
        cfg.seed,
    )?;
    Ok((error, score))
}

/// Ranks hypotheses by held-out prediction error (optimality score, then index, break ties).
pub fn select_interactive_model(
    traj: &Trajectory,
    candidates: &[Candidate],
    cfg: &SelectionConfig,
) -> Result<CandidateRanking> {
    select_with_holdout(traj, candidates, cfg.holdout_fraction, cfg)
}

pub fn select_with_holdout(
    traj: &Trajectory,
    candidates: &[Candidate],
    holdout_fraction: f64,
    cfg: &SelectionConfig,
) -> Result<CandidateRanking> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::invalid("holdout fraction must lie in (0, 1)"));
    }
    if traj.controls.is_none() {
        return Err(Error::MissingInput("candidate selection needs recorded controls".into()));
    }
    let d = traj.state_dim();
    let k = traj.control_dim();
    let dict = monomial_dictionary(d, k, cfg.degree);
    let split = holdout_split(traj.grid.n_steps, holdout_fraction);
    let need = dict.len() + 2;
    if split + 1 < need || traj.grid.n_steps - split + 1 < 3 {
        return Err(Error::InsufficientData(format!(
            "holdout split at node {split} of {} leaves too few nodes (training needs {need})",
            traj.grid.n_steps
        )));
    }
    let (model, _) = fit_dynamics(
        &traj.slice(0, split)?,
        &dict,
        true,
        cfg.ridge,
        cfg.sparsify_threshold,
    )?;
    let shared = Shared {
        traj,
        signals: SignalSet::from_trajectory(traj),
        model,
        split,
        cfg,
    };
    let results: Vec<CandidateResult> = candidates
        .par_iter()
        .map(|c| match evaluate_candidate(&shared, c) {
            Ok((e, s)) => CandidateResult {
                label: c.label.clone(),
                prediction_error: Some(e),
                optimality_score: s,
                failure: None,
            },
            Err(err) => CandidateResult {
                label: c.label.clone(),
                prediction_error: None,
                optimality_score: 0.0,
                failure: Some(err.to_string()),
            },
        })
        .collect();
    Ok(rank(results, cfg.tie_tolerance))
}

fn rank(results: Vec<CandidateResult>, tie_tolerance: f64) -> CandidateRanking {
    let err = |r: &CandidateResult| r.prediction_error.unwrap_or(f64::INFINITY);
    let min_err = results.iter().map(err).fold(f64::INFINITY, f64::min);
    let tol = tie_tolerance * (1.0 + if min_err.is_finite() { min_err } else { 0.0 });
    let key = |i: usize| -> (bool, f64, f64, usize) {
        let e = err(&results[i]);
        let tied = e.is_finite() && e - min_err <= tol;
        // tied candidates sort first, by score; the rest by error, then score
        (
            !tied,
            if tied { 0.0 } else { e },
            -results[i].optimality_score,
            i,
        )
    };
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&a, &b| {
        let (ka, kb) = (key(a), key(b));
        ka.0.cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(ka.2.total_cmp(&kb.2))
            .then(ka.3.cmp(&kb.3))
    });
    CandidateRanking {
        best_index: order[0],
        order,
        candidates: results,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, SignalRole, TimeGrid};

    fn decay_model() -> DynamicsModel {
        let mut m = DynamicsModel::zeros(1, 0, vec![]);
        m.set(0, BasisTerm::state(0, 1, 0), -1.0);
        m
    }

    #[test]
    fn fit_recovers_decay() {
        let g = TimeGrid::new(0.0, 0.01, 500).unwrap();
        let traj = integrate(&decay_model(), &[2.0], None, &g).unwrap();
        let dict = monomial_dictionary(1, 0, 2);
        let (m, _) = fit_dynamics(&traj, &dict, false, 0.0, 0.0).unwrap();
        let expect = [0.0, -1.0, 0.0];
        for (c, e) in m.coefficients[0].iter().zip(expect) {
            assert!((c - e).abs() < 1e-3, "{c} vs {e}");
        }
    }

    #[test]
    fn fit_of_zero_record_is_zero() {
        let g = TimeGrid::new(0.0, 0.1, 20).unwrap();
        let traj = Trajectory::new(g, vec![vec![0.0]; 21], None).unwrap();
        let (m, r) = fit_dynamics(&traj, &monomial_dictionary(1, 0, 2), false, 0.0, 0.0).unwrap();
        assert!(m.coefficients[0].iter().all(|&c| c == 0.0));
        assert_eq!(r, 0.0);
        let no_const = vec![BasisTerm::state(0, 1, 0)];
        assert!(matches!(
            fit_dynamics(&traj, &no_const, false, 0.0, 0.0),
            Err(Error::DegenerateRegression(_))
        ));
    }

    #[test]
    fn fit_recovers_control_gain() {
        let g = TimeGrid::new(0.0, 0.01, 400).unwrap();
        let mut model = DynamicsModel::zeros(1, 1, vec![]);
        model.set(0, BasisTerm::control(0, 1, 1), 2.0);
        let u = ControlSignal::new(
            g,
            g.times().into_iter().map(|t| vec![(2.0 * t).sin()]).collect(),
            SignalRole::Interactive,
        )
        .unwrap();
        let traj = integrate(&model, &[0.0], Some(&u), &g).unwrap();
        let dict = monomial_dictionary(1, 1, 1);
        let (m, _) = fit_dynamics(&traj, &dict, true, 0.0, 0.0).unwrap();
        assert!((m.coefficient(0, &BasisTerm::control(0, 1, 1)) - 2.0).abs() < 1e-3);
    }

    #[test]
    fn fit_needs_enough_nodes() {
        let g = TimeGrid::new(0.0, 0.1, 3).unwrap();
        let traj = Trajectory::new(g, vec![vec![0.0]; 4], None).unwrap();
        assert!(matches!(
            fit_dynamics(&traj, &monomial_dictionary(1, 0, 3), false, 0.0, 0.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn infinite_threshold_is_autonomous() {
        let g = TimeGrid::new(0.0, 0.1, 30).unwrap();
        let traj = Trajectory::new(
            g,
            g.times().into_iter().map(|t| vec![(5.0 * t).sin()]).collect(),
            None,
        )
        .unwrap();
        let v = detect_hidden_inputs(&traj, &decay_model(), f64::INFINITY).unwrap();
        assert_eq!(v.verdict, Verdict::Autonomous);
        assert_eq!(v.per_node_residuals.len(), 31);
        let controlled = DynamicsModel::zeros(1, 1, vec![]);
        assert!(detect_hidden_inputs(&traj, &controlled, 1.0).is_err());
    }

    #[test]
    fn perturbation_count_must_be_positive() {
        let g = TimeGrid::new(0.0, 0.1, 10).unwrap();
        let traj = Trajectory::new(g, vec![vec![1.0]; 11], Some(vec![vec![0.0]; 11])).unwrap();
        let pure = ControlSignal::zeros(g, 1, SignalRole::Pure);
        let mut m = DynamicsModel::zeros(1, 1, vec![]);
        m.set(0, BasisTerm::control(0, 1, 1), 1.0);
        let r = local_optimality_score(
            &GoalFunctional::tracking(&[1.0]),
            &m,
            &CouplingForm::additive(1, &[1]),
            &pure,
            &traj,
            0,
            0.1,
            1,
        );
        assert!(matches!(r, Err(Error::InsufficientData(_))));
    }

    #[test]
    fn ranking_ties_fall_back_to_score_then_index() {
        let mk = |e: Option<f64>, s: f64| CandidateResult {
            label: String::new(),
            prediction_error: e,
            optimality_score: s,
            failure: None,
        };
        let r = rank(vec![mk(Some(1.0), 0.9), mk(Some(0.5), 0.2), mk(Some(0.5), 0.7), mk(None, 1.0)], 1e-9);
        assert_eq!(r.best_index, 2);
        assert_eq!(r.order, vec![2, 1, 0, 3]);
        let r = rank(vec![mk(Some(0.0), 0.5), mk(Some(0.0), 0.5)], 1e-9);
        assert_eq!(r.best_index, 0);
    }

    #[test]
    fn interpolation_is_linear_between_nodes() {
        let v = vec![vec![0.0], vec![2.0], vec![4.0]];
        assert_eq!(interpolate(&v, 0.0, 0.5, 0.25), vec![1.0]);
        assert_eq!(interpolate(&v, 0.0, 0.5, 1.0), vec![4.0]);
        assert_eq!(interpolate(&v, 0.0, 0.5, 7.0), vec![4.0]);
    }
}
