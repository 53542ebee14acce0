use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use igame_core::detection::Candidate;
use igame_core::dynamics::{evaluate_rhs, DynamicsModel};
use igame_core::io::series_to_csv;
use igame_core::sdpair::{add_agent, sd_consistency, sd_replay, sd_transform_with, PictureModel, SDPair};

use super::{load_epsilon, recorded_controls, Ctx};
use crate::cli::Common;
use crate::config::{parse_config, SdcheckConfig};
use crate::error::{CliError, CliResult};
use crate::report::RunReport;

pub fn run(common: &Common, config: Option<&str>) -> CliResult<RunReport> {
    let cfg: SdcheckConfig = parse_config(config)?;
    cfg.validate()?;

    let mut ctx = Ctx::open("sdcheck", common)?;
    let traj = ctx.run.read_trajectory(&cfg.trajectory)?;
    let u = recorded_controls(&traj)?;
    let cand: Candidate = ctx.run.read_json(&cfg.candidate)?;
    let model: DynamicsModel = ctx.run.read_json(&cfg.model)?;
    model.validate().map_err(|e| CliError::Input(format!("{}: {e}", cfg.model)))?;
    let eps = load_epsilon(&ctx.run, &cfg.epsilon, &cand.coupling, &traj)?;

    let s = PictureModel::subjects(model, cand.coupling.clone(), vec![cand.filtration.clone()])?;
    let d = ctx
        .timings
        .time("sd transform", || sd_transform_with(&s, &cfg.desires, &eps, &traj, &cfg.sd))?;
    let v = sd_replay(&s, &d, &traj, &eps)?;
    let pair = SDPair::new(s, d, &traj, &u, &v)?;
    log::info!("consistency residual {:.3e}", pair.consistency_residual);
    ctx.run.write_json("sdpair.json", &pair)?;
    ctx.run.write("d_controls.csv", &series_to_csv(&traj.grid, "v", &v.values))?;

    let hidden_residual = pair.d_picture.hidden_parameter_map.as_ref().map(|h| h.residual);
    let mut results = json!({
        "consistency_residual": pair.consistency_residual,
        "hidden_map_residual": hidden_residual,
        "desire_dims": pair.d_picture.coupling.channels.iter().map(|c| c.control_dim).collect::<Vec<_>>(),
    });

    if let Some(agent) = &cfg.add_agent {
        let d2 = add_agent(&pair.d_picture, &agent.term)?;
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let (dim_x, dim_v) = (d2.dynamics.state_dim, d2.dynamics.control_dim);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| rng.random_range(-agent.probe_scale..=agent.probe_scale))
                .collect()
        };
        let mut max_change: f64 = 0.0;
        for _ in 0..agent.probes {
            let (x, w) = (draw(dim_x), draw(dim_v));
            let a = evaluate_rhs(&pair.d_picture.dynamics, &x, &w)?;
            let b = evaluate_rhs(&d2.dynamics, &x, &w)?;
            max_change = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(max_change, f64::max);
        }
        let widened = d2.hidden_parameter_map.as_ref().map(|h| h.map.y_dim)
            != pair.d_picture.hidden_parameter_map.as_ref().map(|h| h.map.y_dim);
        // a widened map reads inputs the record does not carry
        let residual = if widened {
            log::info!("agent term widens the hidden map; consistency not evaluated");
            None
        } else {
            let v2 = sd_replay(&pair.s_picture, &d2, &traj, &eps)?;
            let mut with_agent = SDPair {
                s_picture: pair.s_picture.clone(),
                d_picture: d2.clone(),
                consistency_residual: 0.0,
            };
            with_agent.consistency_residual = sd_consistency(&with_agent, &traj, &u, &v2)?;
            let r = with_agent.consistency_residual;
            ctx.run.write_json("sdpair_with_agent.json", &with_agent)?;
            Some(r)
        };
        results["add_agent"] = json!({
            "probes": agent.probes,
            "dynamics_max_change": max_change,
            "consistency_residual": residual,
        });
    }
    ctx.finish(&cfg, results)
}
