use serde_json::json;

use igame_core::detection::{
    default_threshold, detect_hidden_inputs, fit_dynamics, select_interactive_model, Candidate,
    Verdict,
};
use igame_core::expansion::monomial_dictionary;

use super::{to_value, Ctx};
use crate::cli::Common;
use crate::config::{parse_config, DetectConfig};
use crate::error::{CliError, CliResult};
use crate::report::{emit_plot_data, PlotSeries, RunReport};

pub fn run(
    common: &Common,
    config: Option<&str>,
    trajectory: Option<String>,
    menu: Option<String>,
    threshold: Option<f64>,
) -> CliResult<RunReport> {
    let mut cfg: DetectConfig = parse_config(config)?;
    if let Some(t) = trajectory {
        cfg.trajectory = t;
    }
    if let Some(m) = menu {
        cfg.menu = m;
    }
    if threshold.is_some() {
        cfg.threshold = threshold;
    }
    cfg.selection.seed = common.seed;
    cfg.validate()?;

    let mut ctx = Ctx::open("detect", common)?;
    let traj = ctx.run.read_trajectory(&cfg.trajectory)?;
    let d = traj.state_dim();

    let dict = monomial_dictionary(d, 0, cfg.detection.degree);
    let det = &cfg.detection;
    let (auto, fit_rms) = ctx
        .timings
        .time("autonomous fit", || fit_dynamics(&traj, &dict, false, det.ridge, det.sparsify_threshold))?;
    let threshold = match cfg.threshold {
        Some(t) => t,
        None => default_threshold(&traj, &dict, det)?,
    };
    let verdict = detect_hidden_inputs(&traj, &auto, threshold)?;
    log::info!(
        "residual {:.3e} vs threshold {:.3e}: {:?}",
        verdict.residual_norm,
        verdict.threshold_used,
        verdict.verdict
    );
    ctx.run.write_json("autonomous_model.json", &auto)?;

    let mut results = json!({
        "trajectory": cfg.trajectory,
        "autonomous_fit_rms": fit_rms,
        "verdict": to_value(&verdict),
    });

    if verdict.verdict == Verdict::HiddenInputs {
        if traj.controls.is_none() {
            return Err(CliError::Input(
                "hidden inputs detected but the trajectory records no controls to rank candidates on".into(),
            ));
        }
        let menu: Vec<Candidate> = ctx.run.read_json(&cfg.menu)?;
        let sel = &cfg.selection;
        let ranking = ctx
            .timings
            .time("candidate selection", || select_interactive_model(&traj, &menu, sel))?;
        let best = &menu[ranking.best_index];
        log::info!("best candidate: {} (index {})", best.label, ranking.best_index);
        ctx.run.write_json("best_candidate.json", best)?;

        let m = &cfg.model;
        let cdict = monomial_dictionary(d, traj.control_dim(), m.degree);
        let (controlled, crms) = ctx
            .timings
            .time("controlled fit", || fit_dynamics(&traj, &cdict, true, m.ridge, m.sparsify_threshold))?;
        ctx.run.write_json("controlled_model.json", &controlled)?;
        results["ranking"] = to_value(&ranking);
        results["best_candidate"] = json!(best.label);
        results["controlled_fit_rms"] = json!(crms);
    }

    let series = [PlotSeries {
        family: "residual_profile".into(),
        name: "residual_profile".into(),
        x_name: "t".into(),
        xs: traj.grid.times(),
        ys: verdict.per_node_residuals.clone(),
    }];
    emit_plot_data(&mut ctx.run, &series, cfg.plots.as_deref())?;
    ctx.finish(&cfg, results)
}
