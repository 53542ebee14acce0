use serde_json::{json, Value};

use igame_core::dynamics::{ControlSignal, Trajectory};
use igame_core::epsilon::extract_desires;
use igame_core::filtration::{SignalSet, SignalSource};
use igame_core::io::words_to_csv;
use igame_core::sdpair::{sd_replay, SDPair};
use igame_core::verbalization::{
    check_synlinguism, compute_words, fit_recursion, segment_state_features, segment_trajectory,
    Partition, PictureTag, SegmentFunctionalSpec, WordSequence,
};

use super::{load_epsilon, recorded_controls, Ctx};
use crate::cli::Common;
use crate::config::{parse_config, VerbalizeConfig};
use crate::error::CliResult;
use crate::report::{emit_plot_data, PlotSeries, RunReport};

/// `2 ln(n) * mean component variance` of the driver, floored away from zero.
pub fn default_penalty(driver: &ControlSignal) -> f64 {
    let n = driver.values.len() as f64;
    let dim = driver.dim().max(1);
    let var: f64 = (0..dim)
        .map(|i| {
            let col = driver.values.iter().map(|r| r.get(i).copied().unwrap_or(0.0));
            let mean = col.clone().sum::<f64>() / n;
            col.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
        })
        .sum::<f64>()
        / dim as f64;
    (2.0 * n.ln() * var).max(1e-12)
}

fn minus(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
        .collect()
}

/// Recursion fit for one picture; quantized words are reported, not fitted.
fn recursion(
    ctx: &mut Ctx,
    cfg: &VerbalizeConfig,
    picture: PictureTag,
    words: &WordSequence,
    partition: &Partition,
    signals: &SignalSet,
    traj: &Trajectory,
) -> CliResult<Value> {
    if words.as_continuous().is_none() {
        return Ok(json!({ "skipped": "quantized words carry no recursion" }));
    }
    let tag = match picture {
        PictureTag::S => "s",
        PictureTag::D => "d",
    };
    let spec = SegmentFunctionalSpec {
        codebook: None,
        ..cfg.tactics.clone()
    };
    let tactics = compute_words(&spec, partition, signals, picture)?;
    let features = segment_state_features(traj, partition)?;
    let model = fit_recursion(words, &tactics, &features, cfg.ridge, cfg.recursion_tolerance)?;
    ctx.run.write_json(&format!("recursion_{tag}.json"), &model)?;
    Ok(json!({
        "verbalizable": model.verbalizable,
        "max_residual": model.max_residual(),
    }))
}

pub fn run(common: &Common, config: Option<&str>, penalty: Option<f64>) -> CliResult<RunReport> {
    let mut cfg: VerbalizeConfig = parse_config(config)?;
    if penalty.is_some() {
        cfg.penalty = penalty;
    }
    cfg.validate()?;

    let mut ctx = Ctx::open("verbalize", common)?;
    let traj = ctx.run.read_trajectory(&cfg.trajectory)?;
    recorded_controls(&traj)?;
    let pair: SDPair = ctx.run.read_json(&cfg.sdpair)?;
    let (s, d) = (&pair.s_picture, &pair.d_picture);
    s.validate()?;
    d.validate()?;
    let eps = load_epsilon(&ctx.run, &cfg.epsilon, &s.coupling, &traj)?;

    let pure = s.pure_controls(&traj, &eps)?;
    let v = sd_replay(s, d, &traj, &eps)?;
    let desires = extract_desires(&d.filtrations, &eps, &traj)?;
    let v0: Vec<Vec<f64>> = (0..traj.len())
        .map(|n| desires.iter().flat_map(|x| x.values[n].iter().copied()).collect())
        .collect();
    let hidden_d = minus(&v.values, &v0);

    let s_signals = SignalSet::from_trajectory(&traj)
        .with_signal(SignalSource::Epsilon, &eps.epsilon)?
        .with_signal(SignalSource::Pure, &pure)?;
    let d_signals = SignalSet::new(traj.grid)
        .with(SignalSource::State, traj.states.clone())?
        .with(SignalSource::Control, v.values.clone())?
        .with(SignalSource::Epsilon, hidden_d)?
        .with(SignalSource::Pure, v0.clone())?
        .with(SignalSource::Desire, v0)?;

    let penalty = cfg.penalty.unwrap_or_else(|| default_penalty(&eps.epsilon));
    let partition = ctx
        .timings
        .time("segmentation", || segment_trajectory(&traj, &eps.epsilon, penalty, cfg.min_len))?;
    log::info!("{} segments (penalty {penalty:.3e})", partition.n_segments());
    ctx.run.write_json("partition.json", &partition)?;

    let words_s = compute_words(&cfg.words, &partition, &s_signals, PictureTag::S)?;
    let words_d = compute_words(&cfg.words, &partition, &d_signals, PictureTag::D)?;
    ctx.run.write("words_s.csv", &words_to_csv(&words_s, &partition, &traj.grid)?)?;
    ctx.run.write("words_d.csv", &words_to_csv(&words_d, &partition, &traj.grid)?)?;
    let syn = check_synlinguism(&words_s, &words_d, cfg.synlinguism_tolerance)?;
    log::info!("synlinguistic: {} (first mismatch {:?})", syn.synlinguistic, syn.first_mismatch);

    let rec_s = recursion(&mut ctx, &cfg, PictureTag::S, &words_s, &partition, &s_signals, &traj)?;
    let rec_d = recursion(&mut ctx, &cfg, PictureTag::D, &words_d, &partition, &d_signals, &traj)?;

    let segment_index: Vec<f64> = (1..=syn.deviations.len()).map(|j| j as f64).collect();
    let series = [PlotSeries {
        family: "segment_deviations".into(),
        name: "segment_deviations".into(),
        x_name: "segment".into(),
        xs: segment_index,
        ys: syn.deviations.clone(),
    }];
    emit_plot_data(&mut ctx.run, &series, cfg.plots.as_deref())?;

    let results = json!({
        "penalty": penalty,
        "segments": partition.n_segments(),
        "breakpoints_t": partition.breakpoints.iter().map(|&k| traj.grid.time(k)).collect::<Vec<_>>(),
        "synlinguism": {
            "synlinguistic": syn.synlinguistic,
            "first_mismatch": syn.first_mismatch,
            "deviations": syn.deviations,
        },
        "recursion": { "s": rec_s, "d": rec_d },
    });
    ctx.finish(&cfg, results)
}
