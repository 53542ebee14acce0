pub mod detect;
pub mod quantize;
pub mod sdcheck;
pub mod simulate;
pub mod unravel;
pub mod verbalize;

use serde::Serialize;
use serde_json::Value;

use igame_core::detection::Candidate;
use igame_core::dynamics::{ControlSignal, SignalRole, Trajectory};
use igame_core::epsilon::{CouplingForm, EpsilonRepresentation};
use igame_core::filtration::{apply_filtration, SignalSet};

use crate::cli::Common;
use crate::error::{CliError, CliResult};
use crate::report::{RunReport, Timings};
use crate::rundir::RunDir;

/// State shared by a command while it runs.
pub(crate) struct Ctx {
    pub run: RunDir,
    pub seed: u64,
    pub timings: Timings,
    write_timings: bool,
    command: &'static str,
}

impl Ctx {
    pub fn open(command: &'static str, common: &Common) -> CliResult<Self> {
        Ok(Self {
            run: RunDir::create(&common.out)?,
            seed: common.seed,
            timings: Timings::default(),
            write_timings: common.timings,
            command,
        })
    }

    /// Writes the timings (on request) and the report.
    pub fn finish(mut self, config: &impl Serialize, results: Value) -> CliResult<RunReport> {
        if self.write_timings {
            let rel = format!("{}.timings.json", self.command);
            let t = std::mem::take(&mut self.timings);
            self.run.write_json(&rel, &t)?;
        }
        let report = RunReport {
            command: self.command.to_string(),
            seed: self.seed,
            config: serde_json::to_value(config).map_err(|e| CliError::config(e.to_string()))?,
            results,
            artifacts: self.run.manifest(),
        };
        self.run.write_json(&RunReport::file_name(self.command), &report)?;
        Ok(report)
    }
}

pub(crate) fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

/// Controls recorded in the trajectory, required by most stages.
pub(crate) fn recorded_controls(traj: &Trajectory) -> CliResult<ControlSignal> {
    traj.control_signal(SignalRole::Interactive).ok_or_else(|| {
        CliError::Input("the trajectory has no control columns (u_1, ...)".into())
    })
}

/// `u°` of a candidate on the record.
pub(crate) fn candidate_pure(cand: &Candidate, traj: &Trajectory) -> CliResult<ControlSignal> {
    Ok(apply_filtration(&cand.filtration, &SignalSet::from_trajectory(traj))?)
}

/// An ε series read from CSV and paired with a coupling.
pub(crate) fn load_epsilon(
    run: &RunDir,
    path: &str,
    coupling: &CouplingForm,
    traj: &Trajectory,
) -> CliResult<EpsilonRepresentation> {
    let text = run.read(path)?;
    let (grid, values) = igame_core::io::series_from_csv(&text, "eps")
        .map_err(|e| CliError::Input(format!("{path}: {e}")))?;
    if grid != traj.grid {
        return Err(CliError::Input(format!("{path} is not on the trajectory grid")));
    }
    let dim = values.first().map_or(0, Vec::len);
    if dim != coupling.epsilon_dim() {
        return Err(CliError::Input(format!(
            "{path} has {dim} ε components, the coupling takes {}",
            coupling.epsilon_dim()
        )));
    }
    Ok(EpsilonRepresentation {
        coupling: coupling.clone(),
        epsilon: ControlSignal::new(grid, values, SignalRole::Epsilon)?,
        recovery_residual: 0.0,
    })
}

/// Largest mismatch between the controls replayed from `(u°, ε)` and the recorded ones.
pub(crate) fn replay_residual(eps: &EpsilonRepresentation, traj: &Trajectory, pure: &ControlSignal) -> f64 {
    let Some(u) = &traj.controls else { return 0.0 };
    eps.replay(traj, pure)
        .iter()
        .zip(u)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}
