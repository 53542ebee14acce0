use nalgebra::DMatrix;
use proptest::prelude::*;

use igame_core::detection::{
    detect_hidden_inputs, detect_with_defaults, fit_dynamics, select_interactive_model,
    DetectionConfig, SelectionConfig, Verdict,
};
use igame_core::dynamics::{estimate_derivatives, integrate, ControlSignal, DynamicsModel, SignalRole, TimeGrid};
use igame_core::expansion::{monomial_dictionary, BasisTerm};
use igame_core::scenarios::{generate, saccade};

fn linear_model(a: [[f64; 2]; 2], b: [f64; 2]) -> DynamicsModel {
    let mut m = DynamicsModel::zeros(2, 1, Vec::new());
    for (r, row) in a.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            m.set(r, BasisTerm::state(c, 2, 1), *v);
        }
        m.set(r, BasisTerm::control(0, 2, 1), b[r]);
    }
    m
}

#[test]
fn rk4_matches_closed_form() {
    // x' = a x + b u with constant u
    let (a, b, u, x0) = (-0.8, 0.5, 1.5, 2.0);
    let mut m = DynamicsModel::zeros(1, 1, Vec::new());
    m.set(0, BasisTerm::state(0, 1, 1), a).set(0, BasisTerm::control(0, 1, 1), b);
    for (dt, bound) in [(0.1, 1e-6), (0.05, 1e-7)] {
        let grid = TimeGrid::new(0.0, dt, (5.0 / dt) as usize).unwrap();
        let controls = ControlSignal::new(grid, vec![vec![u]; grid.len()], SignalRole::Interactive).unwrap();
        let traj = integrate(&m, &[x0], Some(&controls), &grid).unwrap();
        let c = b * u / a;
        for (k, s) in traj.states.iter().enumerate() {
            let exact = (x0 + c) * (a * grid.time(k)).exp() - c;
            assert!((s[0] - exact).abs() < bound, "dt {dt} node {k}: {} vs {exact}", s[0]);
        }
    }
}

#[test]
fn central_differences_are_exact_on_quadratics() {
    let grid = TimeGrid::new(0.0, 0.1, 30).unwrap();
    let states = grid.times().iter().map(|t| vec![3.0 * t * t - t + 2.0]).collect();
    let traj = igame_core::dynamics::Trajectory::new(grid, states, None).unwrap();
    let d = estimate_derivatives(&traj).unwrap();
    for (k, dk) in d.iter().enumerate().take(grid.n_steps).skip(1) {
        let exact = 6.0 * grid.time(k) - 1.0;
        assert!((dk[0] - exact).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The fit is the least-squares solution for the estimated derivatives,
    /// and its error, which comes from central differences alone, vanishes
    /// faster than first order.
    #[test]
    fn linear_systems_are_identified(
        a00 in -1.0..-0.2f64, a01 in -0.5..0.5f64, a10 in -0.5..0.5f64, a11 in -1.0..-0.2f64,
        b0 in -1.0..1.0f64, b1 in -1.0..1.0f64,
        w in 1.0..4.0f64,
    ) {
        let model = linear_model([[a00, a01], [a10, a11]], [b0, b1]);
        let dict = monomial_dictionary(2, 1, 1);
        let terms = [BasisTerm::constant(2, 1), BasisTerm::state(0, 2, 1), BasisTerm::state(1, 2, 1), BasisTerm::control(0, 2, 1)];
        let fit_at = |dt: f64| {
            let grid = TimeGrid::new(0.0, dt, (8.0 / dt).round() as usize).unwrap();
            let u = grid.times().iter().map(|t| vec![(w * t).sin() + 0.5 * (2.7 * w * t).cos()]).collect();
            let controls = ControlSignal::new(grid, u, SignalRole::Interactive).unwrap();
            let traj = integrate(&model, &[1.0, -0.5], Some(&controls), &grid).unwrap();
            let (fit, _) = fit_dynamics(&traj, &dict, true, 0.0, 0.0).unwrap();
            (traj, fit)
        };
        let error = |fit: &DynamicsModel| {
            (0..2)
                .flat_map(|row| dict.iter().map(move |t| (row, t)))
                .map(|(row, t)| (fit.coefficient(row, t) - model.coefficient(row, t)).abs())
                .fold(0.0, f64::max)
        };

        let (traj, coarse) = fit_at(0.01);
        let n = traj.len();
        let phi = DMatrix::from_fn(n, 4, |k, j| match j {
            0 => 1.0,
            1 | 2 => traj.states[k][j - 1],
            _ => traj.controls.as_ref().unwrap()[k][0],
        });
        let d = estimate_derivatives(&traj).unwrap();
        let rhs = DMatrix::from_fn(n, 2, |k, r| d[k][r]);
        let lsq = phi.svd(true, true).solve(&rhs, 1e-14).unwrap();
        for r in 0..2 {
            for (j, t) in terms.iter().enumerate() {
                let (got, want) = (coarse.coefficient(r, t), lsq[(j, r)]);
                prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "row {r} term {t}: {got} vs {want}");
            }
        }

        let (e1, e4) = (error(&coarse), error(&fit_at(0.0025).1));
        prop_assert!(e1 < 0.05, "error {e1:e}");
        if e1 > 1e-8 {
            prop_assert!(e4 <= e1 / 8.0, "errors {e1:e} -> {e4:e}");
        }
    }

    #[test]
    fn verdict_is_monotone_in_threshold(lo in 0.0..2.0f64, gap in 0.0..2.0f64, seed in 0u64..4) {
        let g = generate(&saccade(), seed).unwrap();
        let (model, v) = detect_with_defaults(&g.trajectory, &DetectionConfig::default()).unwrap();
        let scale = v.residual_norm;
        let low = detect_hidden_inputs(&g.trajectory, &model, lo * scale).unwrap();
        let high = detect_hidden_inputs(&g.trajectory, &model, (lo + gap) * scale).unwrap();
        if low.verdict == Verdict::Autonomous {
            prop_assert_eq!(high.verdict, Verdict::Autonomous);
        }
        prop_assert_eq!(low.residual_norm, high.residual_norm);
    }
}

#[test]
fn ranking_does_not_depend_on_menu_order() {
    let s = saccade();
    let g = generate(&s, 0).unwrap();
    let menu = s.menu();
    let cfg = SelectionConfig::default();
    let best = select_interactive_model(&g.trajectory, &menu, &cfg).unwrap();
    let best_label = &menu[best.best_index].label;
    for perm in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
        let shuffled: Vec<_> = perm.iter().map(|&i| menu[i].clone()).collect();
        let r = select_interactive_model(&g.trajectory, &shuffled, &cfg).unwrap();
        assert_eq!(&shuffled[r.best_index].label, best_label, "order {perm:?}");
        let ordered: Vec<&str> = r.order.iter().map(|&i| shuffled[i].label.as_str()).collect();
        let reference: Vec<&str> = best.order.iter().map(|&i| menu[i].label.as_str()).collect();
        assert_eq!(ordered, reference, "order {perm:?}");
    }
}
