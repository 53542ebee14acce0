use std::path::Path;

use serde_json::json;

use igame_core::io::{series_to_csv, trajectory_to_csv};
use igame_core::scenarios::{generate, resolve_scenario, Scenario};

use super::Ctx;
use crate::cli::Common;
use crate::config::{parse_config, SimulateConfig};
use crate::error::{CliError, CliResult};
use crate::report::RunReport;

fn load_scenario(name: &str) -> CliResult<Scenario> {
    if let Some(s) = resolve_scenario(name) {
        return Ok(s);
    }
    let path = Path::new(name);
    if !path.is_file() {
        return Err(CliError::config(format!(
            "`{name}` is neither a builtin scenario nor a scenario file"
        )));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {name}: {e}")))?;
    let s: Scenario = igame_core::io::from_json(&text).map_err(|e| CliError::Input(format!("{name}: {e}")))?;
    s.validate().map_err(|e| CliError::config(format!("{name}: {e}")))?;
    Ok(s)
}

pub fn run(common: &Common, config: Option<&str>, scenario: Option<String>) -> CliResult<RunReport> {
    let mut cfg: SimulateConfig = parse_config(config)?;
    if scenario.is_some() {
        cfg.scenario = scenario;
    }
    let name = cfg
        .scenario
        .clone()
        .ok_or_else(|| CliError::config("no scenario given (--scenario or config `scenario`)"))?;
    // resolve before touching the run directory, so a bad name leaves no files
    let scenario = load_scenario(&name)?;
    let mut ctx = Ctx::open("simulate", common)?;
    let seed = ctx.seed;
    let g = ctx.timings.time("generate", || generate(&scenario, seed))?;

    let run = &mut ctx.run;
    run.write("traj.csv", &trajectory_to_csv(&g.trajectory))?;
    run.write("truth/pure.csv", &series_to_csv(&g.trajectory.grid, "pure", &g.pure.values))?;
    run.write("truth/eps.csv", &series_to_csv(&g.trajectory.grid, "eps", &g.epsilon.epsilon.values))?;
    run.write_json("truth/coupling.json", &scenario.coupling)?;
    run.write_json("truth/dynamics.json", &scenario.dynamics)?;
    run.write_json("scenario.json", &scenario)?;
    run.write_json("menu.json", &scenario.menu())?;
    if !scenario.unravel_menus.is_empty() {
        run.write_json("unravel_menus.json", &scenario.unravel_menus)?;
    }
    let mut files = run.manifest();
    files.push("meta.json".into());
    let meta = json!({
        "seed": seed,
        "scenario": scenario.name,
        "trajectory": "traj.csv",
        "ground_truth": {
            "pure": "truth/pure.csv",
            "epsilon": "truth/eps.csv",
            "coupling": "truth/coupling.json",
            "dynamics": "truth/dynamics.json",
            "generating_candidate_index": 0,
        },
        "files": files,
    });
    run.write_json("meta.json", &meta)?;

    let results = json!({
        "scenario": scenario.name,
        "nodes": g.trajectory.len(),
        "state_dim": g.trajectory.state_dim(),
        "control_dim": g.trajectory.control_dim(),
        "epsilon_max_abs": g.epsilon.epsilon.values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())),
    });
    ctx.finish(&cfg, results)
}
