use proptest::prelude::*;

use igame_core::dynamics::{TimeGrid, Trajectory};
use igame_core::io::{from_json, series_from_csv, series_to_csv, to_json, trajectory_from_csv, trajectory_to_csv};
use igame_core::scenarios::{builtin_catalog, extra_fixtures, generate, Scenario};

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trajectory_csv_round_trips_bit_for_bit(
        n_steps in 1usize..20,
        d in 1usize..4,
        k in 0usize..3,
        t0 in -100.0..100.0f64,
        dt in 1e-3..10.0f64,
        seed_values in prop::collection::vec(finite(), 1..40),
    ) {
        let grid = TimeGrid::new(t0, dt, n_steps).unwrap();
        let pick = |i: usize| seed_values[i % seed_values.len()];
        let states = (0..=n_steps).map(|r| (0..d).map(|c| pick(r * 7 + c)).collect()).collect();
        let controls = (k > 0).then(|| (0..=n_steps).map(|r| (0..k).map(|c| pick(r * 3 + c + 1)).collect()).collect());
        let traj = Trajectory::new(grid, states, controls).unwrap();
        let back = trajectory_from_csv(&trajectory_to_csv(&traj)).unwrap();
        prop_assert_eq!(&back.states, &traj.states);
        prop_assert_eq!(&back.controls, &traj.controls);
        prop_assert_eq!(back.grid.n_steps, n_steps);
        prop_assert!((back.grid.dt - dt).abs() <= 1e-9 * dt);

        let (g2, values) = series_from_csv(&series_to_csv(&grid, "eps", &traj.states), "eps").unwrap();
        prop_assert_eq!(values, traj.states);
        prop_assert_eq!(g2.n_steps, n_steps);
    }
}

#[test]
fn scenarios_round_trip_through_json() {
    for s in builtin_catalog().into_iter().chain(extra_fixtures()) {
        let text = to_json(&s).unwrap();
        let back: Scenario = from_json(&text).unwrap();
        assert_eq!(back, s, "{}", s.name);
        let g = generate(&s, 3).unwrap();
        let g2 = generate(&back, 3).unwrap();
        assert_eq!(trajectory_to_csv(&g.trajectory), trajectory_to_csv(&g2.trajectory));
    }
}
