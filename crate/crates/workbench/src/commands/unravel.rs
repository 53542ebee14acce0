use serde_json::json;

use igame_core::detection::Candidate;
use igame_core::epsilon::{extract_desires, fit_desire_map, recover_epsilon, unravel_recursive};
use igame_core::expansion::monomial_dictionary;
use igame_core::io::series_to_csv;

use super::{candidate_pure, load_epsilon, recorded_controls, replay_residual, to_value, Ctx};
use crate::cli::Common;
use crate::config::{parse_config, UnravelConfig};
use crate::error::{CliError, CliResult};
use crate::report::RunReport;

const DEFAULT_MENUS: &str = "unravel_menus.json";

pub fn run(
    common: &Common,
    config: Option<&str>,
    epsilon: Option<String>,
    depth: Option<usize>,
) -> CliResult<RunReport> {
    let mut cfg: UnravelConfig = parse_config(config)?;
    if epsilon.is_some() {
        cfg.epsilon = epsilon;
    }
    if let Some(d) = depth {
        cfg.depth = d;
    }
    cfg.selection.seed = common.seed;
    cfg.validate()?;

    let mut ctx = Ctx::open("unravel", common)?;
    let traj = ctx.run.read_trajectory(&cfg.trajectory)?;
    let u = recorded_controls(&traj)?;
    let cand: Candidate = ctx.run.read_json(&cfg.candidate)?;
    let pure = candidate_pure(&cand, &traj)?;

    let eps = match &cfg.epsilon {
        Some(path) => {
            let mut e = load_epsilon(&ctx.run, path, &cand.coupling, &traj)?;
            e.recovery_residual = replay_residual(&e, &traj, &pure);
            e
        }
        None => ctx.timings.time("epsilon recovery", || {
            recover_epsilon(&cand.coupling, &u, &pure, &traj, cfg.singular_tolerance)
        })?,
    };
    let grid = traj.grid;
    ctx.run.write("pure.csv", &series_to_csv(&grid, "pure", &pure.values))?;
    ctx.run.write("eps.csv", &series_to_csv(&grid, "eps", &eps.epsilon.values))?;
    ctx.run.write_json("coupling.json", &eps.coupling)?;

    let desires = extract_desires(&cfg.desires, &eps, &traj)?;
    let v0: Vec<Vec<f64>> = (0..traj.len())
        .map(|n| desires.iter().flat_map(|d| d.values[n].iter().copied()).collect())
        .collect();
    ctx.run.write("desires.csv", &series_to_csv(&grid, "v", &v0))?;
    let dict = monomial_dictionary(traj.state_dim(), v0[0].len(), cfg.desire_map_degree);
    let map = ctx.timings.time("desire map", || {
        fit_desire_map(&desires, &traj, &eps, &dict, cfg.desire_map_ridge)
    })?;
    ctx.run.write_json("desire_map.json", &map)?;

    let menus_path = match &cfg.menus {
        Some(p) => Some(p.clone()),
        None => ctx.run.exists(DEFAULT_MENUS).then(|| DEFAULT_MENUS.to_string()),
    };
    let unraveling = match &menus_path {
        Some(p) => {
            let menus: Vec<Vec<Candidate>> = ctx.run.read_json(p)?;
            if menus.is_empty() {
                return Err(CliError::config(format!("{p} holds no menus")));
            }
            let tree = ctx.timings.time("recursive unraveling", || {
                unravel_recursive(&traj, &eps, &menus, cfg.depth, &cfg.detection, &cfg.selection)
            })?;
            for l in 1..=tree.depth() {
                let lv = tree.level(l).expect("level within depth");
                log::info!("level {l}: {:?}, best {}", lv.verdict.verdict, lv.ranking.best_index);
            }
            to_value(&tree)
        }
        None => {
            log::info!("no unraveling menus; skipping recursive unraveling");
            serde_json::Value::Null
        }
    };

    let results = json!({
        "candidate": cand.label,
        "epsilon_source": cfg.epsilon.as_deref().unwrap_or("recovered"),
        "recovery_residual": eps.recovery_residual,
        "epsilon_max_abs": eps.epsilon.values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())),
        "desire_map_residual": map.residual,
        "unraveling": unraveling,
    });
    ctx.finish(&cfg, results)
}
