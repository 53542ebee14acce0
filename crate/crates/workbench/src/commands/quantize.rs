use serde_json::json;

use igame_core::epsilon::CouplingForm;
use igame_core::filtration::{FilterPrimitive, FiltrationSpec, SignalSelector, SignalSource};
use igame_core::io::state_to_csv;
use igame_core::quantum::{
    build_hamiltonian, evolve_slow, ladder_operators, quick_time_coefficients, FilterBasis, FockSpace,
    HamiltonianSpec, QuantumOperator, QuantumState,
};

use super::{load_epsilon, Ctx};
use crate::cli::Common;
use crate::config::{parse_config, QuantizeConfig};
use crate::error::{CliError, CliResult};
use crate::report::{emit_plot_data, PlotSeries, RunReport};

/// Where each slow step's Hamiltonian comes from.
enum Source {
    Fixed(HamiltonianSpec),
    /// Basis filtrations read on windows of the record ending at the given nodes.
    QuickTime {
        basis: FilterBasis,
        windows: Vec<(usize, usize)>,
        traj: igame_core::dynamics::Trajectory,
        eps: igame_core::epsilon::EpsilonRepresentation,
    },
}

fn epsilon_basis(dim: usize) -> Vec<FiltrationSpec> {
    (0..dim)
        .map(|i| {
            FiltrationSpec::new(
                vec![SignalSelector::component(SignalSource::Epsilon, i)],
                vec![FilterPrimitive::MovingAverage { window: 1 }],
            )
        })
        .collect()
}

fn initial_state(cfg: &QuantizeConfig, space: &FockSpace) -> CliResult<QuantumState> {
    if let Some(c) = &cfg.initial_coefficients {
        if c.len() != space.dim() {
            return Err(CliError::config(format!(
                "{} initial coefficients for a space of dimension {}",
                c.len(),
                space.dim()
            )));
        }
        return QuantumState::new(c.clone()).map_err(|e| CliError::config(e.to_string()));
    }
    let occ = cfg.initial_occupations.clone().unwrap_or_else(|| vec![0; space.modes]);
    QuantumState::basis(space, &occ).map_err(|e| CliError::config(e.to_string()))
}

pub fn run(common: &Common, config: Option<&str>, cutoff: Option<u32>) -> CliResult<RunReport> {
    let mut cfg: QuantizeConfig = parse_config(config)?;
    if let Some(c) = cutoff {
        cfg.cutoff = c;
    }
    cfg.validate()?;
    let mut ctx = Ctx::open("quantize", common)?;

    let source = match &cfg.hamiltonian {
        Some(h) => Source::Fixed(h.clone()),
        None => {
            let traj = ctx.run.read_trajectory(&cfg.trajectory)?;
            let coupling: CouplingForm = ctx.run.read_json(&cfg.coupling)?;
            let eps = load_epsilon(&ctx.run, &cfg.epsilon, &coupling, &traj)?;
            let specs = cfg.basis.clone().unwrap_or_else(|| epsilon_basis(coupling.epsilon_dim()));
            let basis = FilterBasis::new(specs).map_err(|e| CliError::config(e.to_string()))?;
            let n = traj.grid.n_steps;
            let w0 = cfg.window - 1;
            if w0 > n {
                return Err(CliError::config(format!(
                    "window of {} nodes on a record of {}",
                    cfg.window,
                    n + 1
                )));
            }
            let windows = (1..=cfg.slow_steps)
                .map(|j| {
                    let end = w0 + j * (n - w0) / cfg.slow_steps;
                    (end - w0, end)
                })
                .collect();
            Source::QuickTime {
                basis,
                windows,
                traj,
                eps,
            }
        }
    };
    let modes = match &source {
        Source::Fixed(h) => h.modes(),
        Source::QuickTime { basis, .. } => basis.modes(),
    };
    let space = FockSpace::new(modes, cfg.cutoff).map_err(|e| CliError::config(e.to_string()))?;
    let mut state = initial_state(&cfg, &space)?;
    let (a, ad) = ladder_operators(&space);
    let numbers: Vec<QuantumOperator> = a
        .iter()
        .zip(&ad)
        .map(|(a, ad)| ad.matmul(a))
        .collect::<Result<_, _>>()?;

    let mut specs = Vec::with_capacity(cfg.slow_steps);
    let mut norms = vec![state.norm()];
    let mut occupations = vec![expectations(&state, &numbers)?];
    ctx.run.write("snapshots/step_000.csv", &state_to_csv(&state, &space)?)?;
    for step in 1..=cfg.slow_steps {
        let spec = match &source {
            Source::Fixed(h) => h.clone(),
            Source::QuickTime {
                basis,
                windows,
                traj,
                eps,
            } => {
                let (start, end) = windows[step - 1];
                let t = traj.slice(start, end)?;
                let mut e = eps.clone();
                e.epsilon = eps.epsilon.slice(start, end)?;
                quick_time_coefficients(basis, &e, &t, cfg.window)?
            }
        };
        let h = build_hamiltonian(&spec, &space)?;
        state = ctx.timings.time("evolve", || evolve_slow(&state, &h, cfg.slow_dt))?;
        norms.push(state.norm());
        occupations.push(expectations(&state, &numbers)?);
        ctx.run.write(&format!("snapshots/step_{step:03}.csv"), &state_to_csv(&state, &space)?)?;
        specs.push(spec);
    }
    let times: Vec<f64> = (0..=cfg.slow_steps).map(|j| j as f64 * cfg.slow_dt).collect();
    let mut series: Vec<PlotSeries> = (0..modes)
        .map(|m| PlotSeries {
            family: "occupations".into(),
            name: format!("occupation_{}", m + 1),
            x_name: "slow_t".into(),
            xs: times.clone(),
            ys: occupations.iter().map(|o| o[m]).collect(),
        })
        .collect();
    series.push(PlotSeries {
        family: "norm".into(),
        name: "norm".into(),
        x_name: "slow_t".into(),
        xs: times,
        ys: norms.clone(),
    });
    emit_plot_data(&mut ctx.run, &series, cfg.plots.as_deref())?;

    let drift = norms.iter().map(|n| (n - norms[0]).abs()).fold(0.0, f64::max);
    log::info!("{} slow steps on dimension {}; norm drift {drift:.2e}", cfg.slow_steps, space.dim());
    let results = json!({
        "modes": modes,
        "cutoff": cfg.cutoff,
        "dimension": space.dim(),
        "hamiltonian_source": if matches!(source, Source::Fixed(_)) { "fixed" } else { "quick_time" },
        "hamiltonians": specs,
        "norm_trace": norms,
        "norm_drift": drift,
        "occupation_trace": occupations,
    });
    ctx.finish(&cfg, results)
}

/// `<n_α>` for every mode.
fn expectations(state: &QuantumState, numbers: &[QuantumOperator]) -> CliResult<Vec<f64>> {
    numbers.iter().map(|n| Ok(state.expectation(n)?.re)).collect()
}
