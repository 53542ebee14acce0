//! Per-command run configuration, read from `--config` JSON and patched by flags.
//!
//! Relative paths are resolved inside the run directory, so a stage finds the
//! previous stage's outputs without being told where they are.

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use igame_core::detection::{DetectionConfig, SelectionConfig};
use igame_core::expansion::Expansion;
use igame_core::filtration::{FilterPrimitive, FiltrationSpec, SignalSelector, SignalSource};
use igame_core::quantum::HamiltonianSpec;
use igame_core::sdpair::SdConfig;
use igame_core::verbalization::{Recipe, SegmentFunctionalSpec, WordComponent};

use crate::error::{CliError, CliResult};

pub fn parse_config<T: DeserializeOwned + Default>(text: Option<&str>) -> CliResult<T> {
    match text {
        None => Ok(T::default()),
        Some(t) => serde_json::from_str(t).map_err(|e| CliError::config(e.to_string())),
    }
}

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(format!("{name} must be a positive number, got {v}")))
    }
}

fn check_selection(s: &SelectionConfig) -> CliResult<()> {
    positive("selection.singular_tolerance", s.singular_tolerance)?;
    positive("selection.tie_tolerance", s.tie_tolerance)?;
    positive("selection.perturbation_scale", s.perturbation_scale)?;
    if !(s.holdout_fraction > 0.0 && s.holdout_fraction < 1.0) {
        return Err(CliError::config("selection.holdout_fraction must lie in (0, 1)"));
    }
    Ok(())
}

fn check_detection(d: &DetectionConfig) -> CliResult<()> {
    positive("detection.threshold_multiple", d.threshold_multiple)?;
    if !(d.calibration_fraction > 0.0 && d.calibration_fraction <= 1.0) {
        return Err(CliError::config("detection.calibration_fraction must lie in (0, 1]"));
    }
    Ok(())
}

fn check_plots(plots: &Option<Vec<String>>, known: &[&str]) -> CliResult<()> {
    for p in plots.iter().flatten() {
        if !known.contains(&p.as_str()) {
            return Err(CliError::config(format!("unknown plot series `{p}` (known: {})", known.join(", "))));
        }
    }
    Ok(())
}

/// The raw ε series as a single desire.
pub fn identity_desire() -> FiltrationSpec {
    FiltrationSpec::new(
        vec![SignalSelector::all(SignalSource::Epsilon)],
        vec![FilterPrimitive::MovingAverage { window: 1 }],
    )
}

fn default_desires() -> Vec<FiltrationSpec> {
    vec![identity_desire()]
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Builtin scenario name or path to a scenario JSON.
    pub scenario: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelFit {
    pub degree: u32,
    pub ridge: f64,
    pub sparsify_threshold: f64,
}

impl Default for ModelFit {
    fn default() -> Self {
        Self {
            degree: 1,
            ridge: 0.0,
            sparsify_threshold: 0.02,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    pub trajectory: String,
    pub menu: String,
    pub detection: DetectionConfig,
    /// Overrides the calibrated threshold.
    pub threshold: Option<f64>,
    pub selection: SelectionConfig,
    /// Controlled model `phi' = Phi(phi, u)` persisted for later stages.
    pub model: ModelFit,
    pub plots: Option<Vec<String>>,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            trajectory: "traj.csv".into(),
            menu: "menu.json".into(),
            detection: DetectionConfig::default(),
            threshold: None,
            selection: SelectionConfig::default(),
            model: ModelFit::default(),
            plots: None,
        }
    }
}

impl DetectConfig {
    pub const PLOTS: &'static [&'static str] = &["residual_profile"];

    pub fn validate(&self) -> CliResult<()> {
        check_detection(&self.detection)?;
        check_selection(&self.selection)?;
        if let Some(t) = self.threshold {
            if t.is_nan() || t < 0.0 {
                return Err(CliError::config("threshold must be >= 0"));
            }
        }
        check_plots(&self.plots, Self::PLOTS)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnravelConfig {
    pub trajectory: String,
    pub candidate: String,
    /// Use this ε series instead of recovering it from the candidate.
    pub epsilon: Option<String>,
    pub singular_tolerance: f64,
    pub desires: Vec<FiltrationSpec>,
    pub desire_map_degree: u32,
    pub desire_map_ridge: f64,
    /// Candidate menus per unraveling level; defaults to `unravel_menus.json` when present.
    pub menus: Option<String>,
    pub depth: usize,
    pub detection: DetectionConfig,
    pub selection: SelectionConfig,
}

impl Default for UnravelConfig {
    fn default() -> Self {
        Self {
            trajectory: "traj.csv".into(),
            candidate: "best_candidate.json".into(),
            epsilon: None,
            singular_tolerance: 1e-9,
            desires: default_desires(),
            desire_map_degree: 1,
            desire_map_ridge: 0.0,
            menus: None,
            depth: 1,
            detection: DetectionConfig::default(),
            selection: SelectionConfig::default(),
        }
    }
}

impl UnravelConfig {
    pub fn validate(&self) -> CliResult<()> {
        positive("singular_tolerance", self.singular_tolerance)?;
        if self.depth == 0 {
            return Err(CliError::config("depth must be at least 1"));
        }
        if self.desires.is_empty() {
            return Err(CliError::config("at least one desire filtration is needed"));
        }
        check_detection(&self.detection)?;
        check_selection(&self.selection)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AddAgentConfig {
    /// Extra hidden-parameter term over `(phi, u°)`.
    pub term: Expansion,
    #[serde(default = "default_probes")]
    pub probes: usize,
    /// Probe points are drawn uniformly from `[-scale, scale]` per component.
    #[serde(default = "default_probe_scale")]
    pub probe_scale: f64,
}

fn default_probes() -> usize {
    100
}

fn default_probe_scale() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdcheckConfig {
    pub trajectory: String,
    pub candidate: String,
    pub epsilon: String,
    pub model: String,
    pub desires: Vec<FiltrationSpec>,
    pub sd: SdConfig,
    pub add_agent: Option<AddAgentConfig>,
}

impl Default for SdcheckConfig {
    fn default() -> Self {
        Self {
            trajectory: "traj.csv".into(),
            candidate: "best_candidate.json".into(),
            epsilon: "eps.csv".into(),
            model: "controlled_model.json".into(),
            desires: default_desires(),
            sd: SdConfig::default(),
            add_agent: None,
        }
    }
}

impl SdcheckConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.desires.is_empty() {
            return Err(CliError::config("at least one desire filtration is needed"));
        }
        if let Some(a) = &self.add_agent {
            positive("add_agent.probe_scale", a.probe_scale)?;
        }
        if !(self.sd.ridge >= 0.0) {
            return Err(CliError::config("sd.ridge must be >= 0"));
        }
        Ok(())
    }
}

fn mean_of(source: SignalSource) -> SegmentFunctionalSpec {
    SegmentFunctionalSpec::new(vec![WordComponent {
        recipe: Recipe::Mean,
        input: SignalSelector::all(source),
    }])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerbalizeConfig {
    pub trajectory: String,
    pub sdpair: String,
    pub epsilon: String,
    /// Change-point penalty; by default `2 ln(n) var(ε)`.
    pub penalty: Option<f64>,
    pub min_len: usize,
    pub words: SegmentFunctionalSpec,
    /// Segment functional giving the tactics `u*_n` of the recursion.
    pub tactics: SegmentFunctionalSpec,
    pub synlinguism_tolerance: f64,
    pub recursion_tolerance: f64,
    pub ridge: f64,
    pub plots: Option<Vec<String>>,
}

impl Default for VerbalizeConfig {
    fn default() -> Self {
        Self {
            trajectory: "traj.csv".into(),
            sdpair: "sdpair.json".into(),
            epsilon: "eps.csv".into(),
            penalty: None,
            min_len: 20,
            words: mean_of(SignalSource::State),
            tactics: mean_of(SignalSource::Pure),
            synlinguism_tolerance: 1e-9,
            recursion_tolerance: 1e-6,
            ridge: 0.0,
            plots: None,
        }
    }
}

impl VerbalizeConfig {
    pub const PLOTS: &'static [&'static str] = &["segment_deviations"];

    pub fn validate(&self) -> CliResult<()> {
        if let Some(p) = self.penalty {
            positive("penalty", p)?;
        }
        if self.min_len < 2 {
            return Err(CliError::config("min_len must be at least 2"));
        }
        positive("synlinguism_tolerance", self.synlinguism_tolerance)?;
        positive("recursion_tolerance", self.recursion_tolerance)?;
        if !(self.ridge >= 0.0) {
            return Err(CliError::config("ridge must be >= 0"));
        }
        check_plots(&self.plots, Self::PLOTS)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizeConfig {
    pub cutoff: u32,
    /// Fixed Hamiltonian; when absent the quick-time rule builds one per slow step.
    pub hamiltonian: Option<HamiltonianSpec>,
    /// One scalar filtration per mode; defaults to the ε components.
    pub basis: Option<Vec<FiltrationSpec>>,
    pub trajectory: String,
    pub epsilon: String,
    pub coupling: String,
    /// Quick-time window in nodes (at least 2).
    pub window: usize,
    pub slow_steps: usize,
    pub slow_dt: f64,
    pub initial_occupations: Option<Vec<u32>>,
    /// Explicit initial amplitudes as `[re, im]` pairs in basis order.
    pub initial_coefficients: Option<Vec<Complex64>>,
    pub plots: Option<Vec<String>>,
}

impl Default for QuantizeConfig {
    fn default() -> Self {
        Self {
            cutoff: 2,
            hamiltonian: None,
            basis: None,
            trajectory: "traj.csv".into(),
            epsilon: "eps.csv".into(),
            coupling: "coupling.json".into(),
            window: 50,
            slow_steps: 10,
            slow_dt: 0.1,
            initial_occupations: None,
            initial_coefficients: None,
            plots: None,
        }
    }
}

impl QuantizeConfig {
    pub const PLOTS: &'static [&'static str] = &["occupations", "norm"];

    pub fn validate(&self) -> CliResult<()> {
        positive("slow_dt", self.slow_dt)?;
        if self.slow_steps == 0 {
            return Err(CliError::config("slow_steps must be at least 1"));
        }
        if self.window < 2 {
            return Err(CliError::config("window must be at least 2 nodes"));
        }
        if self.initial_occupations.is_some() && self.initial_coefficients.is_some() {
            return Err(CliError::config(
                "give initial_occupations or initial_coefficients, not both",
            ));
        }
        if let Some(h) = &self.hamiltonian {
            h.validate().map_err(|e| CliError::config(e.to_string()))?;
            let has_vertex = h.vertex.iter().flatten().flatten().any(|&g| g != 0.0);
            if self.cutoff == 0 && has_vertex {
                return Err(CliError::config(
                    "cutoff 0 admits no transitions; the vertex terms cannot act",
                ));
            }
        }
        check_plots(&self.plots, Self::PLOTS)
    }
}
