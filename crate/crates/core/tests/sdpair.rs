use proptest::prelude::*;

use igame_core::dynamics::evaluate_rhs;
use igame_core::epsilon::recover_epsilon;
use igame_core::expansion::{BasisTerm, Expansion};
use igame_core::filtration::{FilterPrimitive, FiltrationSpec, SignalSelector, SignalSource};
use igame_core::scenarios::{generate, linear_relaxation, pursuit, saccade_duo, Scenario};
use igame_core::sdpair::{add_agent, sd_replay, sd_transform, PictureModel, SDPair};

fn desire_identity() -> FiltrationSpec {
    FiltrationSpec::new(
        vec![SignalSelector::all(SignalSource::Epsilon)],
        vec![FilterPrimitive::MovingAverage { window: 1 }],
    )
}

fn d_picture(s: &Scenario) -> (PictureModel, f64) {
    let g = generate(s, 1).unwrap();
    let sp = PictureModel::subjects(s.dynamics.clone(), s.coupling.clone(), vec![s.generating.filtration.clone()]).unwrap();
    let pure = sp.pure_controls(&g.trajectory, &g.epsilon).unwrap();
    let eps = recover_epsilon(&s.coupling, &g.control, &pure, &g.trajectory, 1e-9).unwrap();
    let dp = sd_transform(&sp, &[desire_identity()], &eps, &g.trajectory).unwrap();
    let v = sd_replay(&sp, &dp, &g.trajectory, &eps).unwrap();
    let pair = SDPair::new(sp, dp.clone(), &g.trajectory, &g.control, &v).unwrap();
    (dp, pair.consistency_residual)
}

#[test]
fn construction_residual_vanishes() {
    for s in [linear_relaxation(), pursuit(), saccade_duo()] {
        let (_, r) = d_picture(&s);
        assert!(r <= 1e-9, "{}: {r:e}", s.name);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn add_agent_leaves_dynamics_untouched(
        scenario in 0usize..3,
        extra in 0usize..3,
        exps in prop::collection::vec(0u32..3, 8),
        coef in -5.0..5.0f64,
        probes in prop::collection::vec(-10.0..10.0f64, 8),
    ) {
        let s = [linear_relaxation(), pursuit(), saccade_duo()][scenario].clone();
        let (dp, _) = d_picture(&s);
        let map = &dp.hidden_parameter_map.as_ref().unwrap().map;
        let (xd, yd) = (map.x_dim, map.y_dim + extra);
        let term = BasisTerm::new(
            (0..xd).map(|i| exps[i % exps.len()]).collect(),
            (0..yd).map(|j| exps[(j + 3) % exps.len()]).collect(),
        );
        let mut agent = Expansion::zeros(xd, yd, map.out_dim());
        agent.add(map.out_dim() - 1, term, coef);
        let d2 = add_agent(&dp, &agent).unwrap();
        prop_assert_eq!(&d2.dynamics, &dp.dynamics);
        prop_assert_eq!(&d2.coupling, &dp.coupling);
        let x: Vec<f64> = (0..dp.dynamics.state_dim).map(|i| probes[i % 8]).collect();
        let w: Vec<f64> = (0..dp.dynamics.control_dim).map(|i| probes[(i + 5) % 8]).collect();
        let before = evaluate_rhs(&dp.dynamics, &x, &w).unwrap();
        let after = evaluate_rhs(&d2.dynamics, &x, &w).unwrap();
        prop_assert_eq!(before, after);
        prop_assert_eq!(d2.hidden_parameter_map.unwrap().map.y_dim, yd);
    }
}
