use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliResult;
use crate::rundir::RunDir;

/// What a command did, written as `<command>.report.json` in the run directory.
///
/// Everything in it is a function of the inputs, config and seed; wall-clock
/// timings are kept out so that reruns produce identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub config: Value,
    pub results: Value,
    /// Files written by the command, relative to the run directory.
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn file_name(command: &str) -> String {
        format!("{command}.report.json")
    }
}

/// Stage timings, only written on request (`--timings`).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Timings {
    pub stages: Vec<(String, f64)>,
}

impl Timings {
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = std::time::Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        log::debug!("{stage}: {secs:.3} s");
        self.stages.push((stage.to_string(), secs));
        out
    }
}

/// One two-column series for plotting.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotSeries {
    /// Family name used to request the series (`residual_profile`, ...).
    pub family: String,
    /// File stem under `plots/`.
    pub name: String,
    pub x_name: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

/// Writes `plots/<name>.csv` for every series whose family is requested
/// (`None` requests all). Returns the written paths.
pub fn emit_plot_data(
    run: &mut RunDir,
    series: &[PlotSeries],
    requested: Option<&[String]>,
) -> CliResult<Vec<String>> {
    let mut written = Vec::new();
    for s in series {
        if requested.is_some_and(|r| !r.contains(&s.family)) {
            continue;
        }
        let text = igame_core::io::plot_series_to_csv(&s.x_name, &s.name, &s.xs, &s.ys)?;
        let rel = format!("plots/{}.csv", s.name);
        run.write(&rel, &text)?;
        written.push(rel);
    }
    Ok(written)
}
