//! Finite-memory filtrations built from primitive causal filters.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dynamics::{check_series, ControlSignal, SignalRole, TimeGrid, Trajectory};
use crate::error::{Error, Result};

/// Named inputs a filtration (or a word recipe) can read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalSource {
    /// Observed interactive controls `u`.
    #[serde(rename = "u")]
    Control,
    /// States `phi`.
    #[serde(rename = "phi")]
    State,
    /// Hidden parameters `eps` of the picture under study.
    #[serde(rename = "eps")]
    Epsilon,
    /// Pure controls (`u°` or `v°`).
    Pure,
    /// Desires `v°`.
    Desire,
}

impl SignalSource {
    pub fn name(self) -> &'static str {
        match self {
            SignalSource::Control => "u",
            SignalSource::State => "phi",
            SignalSource::Epsilon => "eps",
            SignalSource::Pure => "pure",
            SignalSource::Desire => "desire",
        }
    }
}

/// Reads one source, optionally restricted to some components.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalSelector {
    pub source: SignalSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<usize>>,
}

impl SignalSelector {
    pub fn all(source: SignalSource) -> Self {
        Self {
            source,
            components: None,
        }
    }

    pub fn component(source: SignalSource, i: usize) -> Self {
        Self {
            source,
            components: Some(vec![i]),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FilterPrimitive {
    /// Trailing mean over `window` nodes (truncated at the series start).
    MovingAverage { window: usize },
    /// `y_k = rate x_k + (1 - rate) y_{k-1}`, `y_0 = x_0`.
    ExponentialSmoothing { rate: f64 },
    /// Backward difference quotient; the first node repeats the first difference.
    FiniteDifference,
    /// Trailing median over `window` nodes (truncated at the series start).
    Median { window: usize },
    /// Passes values with `|x| > threshold`, zeroes the rest.
    DeadBand { threshold: f64 },
}

impl FilterPrimitive {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FilterPrimitive::MovingAverage { window } | FilterPrimitive::Median { window } => {
                if window == 0 {
                    return Err(Error::invalid("filter window must be at least 1"));
                }
            }
            FilterPrimitive::ExponentialSmoothing { rate } => {
                if !(rate > 0.0 && rate <= 1.0) {
                    return Err(Error::invalid(format!("smoothing rate {rate} outside (0, 1]")));
                }
            }
            FilterPrimitive::DeadBand { threshold } => {
                if !(threshold >= 0.0) {
                    return Err(Error::invalid(format!("dead band {threshold} must be >= 0")));
                }
            }
            FilterPrimitive::FiniteDifference => {}
        }
        Ok(())
    }

    /// Linear primitives commute with scaling of their input.
    pub fn is_linear(&self) -> bool {
        !matches!(
            self,
            FilterPrimitive::Median { .. } | FilterPrimitive::DeadBand { .. }
        )
    }

    pub fn apply(&self, x: &[f64], dt: f64) -> Vec<f64> {
        let n = x.len();
        match *self {
            FilterPrimitive::MovingAverage { window } => {
                let mut out = Vec::with_capacity(n);
                for k in 0..n {
                    let lo = (k + 1).saturating_sub(window);
                    let s: f64 = x[lo..=k].iter().sum();
                    out.push(s / (k + 1 - lo) as f64);
                }
                out
            }
            FilterPrimitive::ExponentialSmoothing { rate } => {
                let mut out = Vec::with_capacity(n);
                let mut prev = 0.0;
                for (k, &v) in x.iter().enumerate() {
                    prev = if k == 0 { v } else { rate * v + (1.0 - rate) * prev };
                    out.push(prev);
                }
                out
            }
            FilterPrimitive::FiniteDifference => {
                let mut out = Vec::with_capacity(n);
                for k in 0..n {
                    let j = k.max(1);
                    out.push(if n < 2 { 0.0 } else { (x[j] - x[j - 1]) / dt });
                }
                out
            }
            FilterPrimitive::Median { window } => {
                let mut out = Vec::with_capacity(n);
                let mut buf = Vec::with_capacity(window);
                for k in 0..n {
                    let lo = (k + 1).saturating_sub(window);
                    buf.clear();
                    buf.extend_from_slice(&x[lo..=k]);
                    out.push(crate::linalg::median(&mut buf));
                }
                out
            }
            FilterPrimitive::DeadBand { threshold } => x
                .iter()
                .map(|&v| if v.abs() > threshold { v } else { 0.0 })
                .collect(),
        }
    }
}

/// Selected inputs, concatenated component-wise, passed through the pipeline in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiltrationSpec {
    pub inputs: Vec<SignalSelector>,
    pub pipeline: Vec<FilterPrimitive>,
}

impl FiltrationSpec {
    pub fn new(inputs: Vec<SignalSelector>, pipeline: Vec<FilterPrimitive>) -> Self {
        Self { inputs, pipeline }
    }

    /// Single-primitive filtration of one whole source.
    pub fn of(source: SignalSource, primitive: FilterPrimitive) -> Self {
        Self::new(vec![SignalSelector::all(source)], vec![primitive])
    }

    pub fn validate(&self) -> Result<()> {
        if self.pipeline.is_empty() {
            return Err(Error::invalid("filtration pipeline is empty"));
        }
        if self.inputs.is_empty() {
            return Err(Error::invalid("filtration selects no input"));
        }
        self.pipeline.iter().try_for_each(FilterPrimitive::validate)
    }

    pub fn is_linear(&self) -> bool {
        self.pipeline.iter().all(FilterPrimitive::is_linear)
    }

    pub fn reads_only(&self, allowed: &[SignalSource]) -> bool {
        self.inputs.iter().all(|s| allowed.contains(&s.source))
    }
}

/// Series available to filtrations, all on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalSet {
    pub grid: TimeGrid,
    series: BTreeMap<SignalSource, Vec<Vec<f64>>>,
}

impl SignalSet {
    pub fn new(grid: TimeGrid) -> Self {
        Self {
            grid,
            series: BTreeMap::new(),
        }
    }

    /// States and, when recorded, controls.
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        let mut s = Self::new(traj.grid);
        s.series.insert(SignalSource::State, traj.states.clone());
        if let Some(c) = &traj.controls {
            s.series.insert(SignalSource::Control, c.clone());
        }
        s
    }

    pub fn insert(&mut self, source: SignalSource, values: Vec<Vec<f64>>) -> Result<&mut Self> {
        check_series(&self.grid, &values, source.name())?;
        self.series.insert(source, values);
        Ok(self)
    }

    pub fn with(mut self, source: SignalSource, values: Vec<Vec<f64>>) -> Result<Self> {
        self.insert(source, values)?;
        Ok(self)
    }

    pub fn with_signal(self, source: SignalSource, signal: &ControlSignal) -> Result<Self> {
        if signal.grid != self.grid {
            return Err(Error::dims(format!("{} is on a different grid", source.name())));
        }
        self.with(source, signal.values.clone())
    }

    pub fn get(&self, source: SignalSource) -> Option<&Vec<Vec<f64>>> {
        self.series.get(&source)
    }

    /// Columns selected by `sel`, each as a full time series.
    pub fn columns(&self, sel: &SignalSelector) -> Result<Vec<Vec<f64>>> {
        let series = self
            .series
            .get(&sel.source)
            .ok_or_else(|| Error::MissingInput(sel.source.name().to_string()))?;
        let dim = series[0].len();
        let idx: Vec<usize> = match &sel.components {
            Some(c) => c.clone(),
            None => (0..dim).collect(),
        };
        if let Some(&bad) = idx.iter().find(|&&i| i >= dim) {
            return Err(Error::dims(format!(
                "component {bad} requested from {} of dimension {dim}",
                sel.source.name()
            )));
        }
        Ok(idx
            .iter()
            .map(|&i| series.iter().map(|v| v[i]).collect())
            .collect())
    }
}

pub fn apply_filtration(spec: &FiltrationSpec, signals: &SignalSet) -> Result<ControlSignal> {
    spec.validate()?;
    let mut columns = Vec::new();
    for sel in &spec.inputs {
        columns.extend(signals.columns(sel)?);
    }
    let dt = signals.grid.dt;
    let filtered: Vec<Vec<f64>> = columns
        .into_iter()
        .map(|mut c| {
            for p in &spec.pipeline {
                c = p.apply(&c, dt);
            }
            c
        })
        .collect();
    let n = signals.grid.len();
    let values: Vec<Vec<f64>> = (0..n)
        .map(|k| filtered.iter().map(|c| c[k]).collect())
        .collect();
    let role = if spec
        .inputs
        .iter()
        .any(|s| s.source == SignalSource::Epsilon)
    {
        SignalRole::Desire
    } else {
        SignalRole::Pure
    };
    ControlSignal::new(signals.grid, values, role)
}

/// Output at the final node when the filtration only sees the last `window` nodes.
pub fn apply_on_window(spec: &FiltrationSpec, signals: &SignalSet, window: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = signals.grid.len();
    if window == 0 || window > n {
        return Err(Error::InsufficientData(format!(
            "window of {window} nodes on a record of {n}"
        )));
    }
    let dt = signals.grid.dt;
    let mut out = Vec::new();
    for sel in &spec.inputs {
        for c in signals.columns(sel)? {
            let mut c = c[n - window..].to_vec();
            for p in &spec.pipeline {
                c = p.apply(&c, dt);
            }
            out.push(c[window - 1]);
        }
    }
    Ok(out)
}
