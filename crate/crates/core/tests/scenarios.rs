use std::time::Instant;

use igame_core::io::trajectory_to_csv;
use igame_core::scenarios::{builtin_catalog, extra_fixtures, generate, pursuit};

#[test]
fn catalog_generates_quickly() {
    let catalog = builtin_catalog();
    assert!(catalog.len() >= 5);
    for s in catalog.iter().chain(&extra_fixtures()) {
        let start = Instant::now();
        let g = generate(s, 0).unwrap();
        let secs = start.elapsed().as_secs_f64();
        assert!(secs < 5.0, "{} took {secs:.2} s", s.name);
        assert_eq!(g.trajectory.len(), s.grid.len());
        assert!(g.trajectory.states.iter().flatten().all(|v| v.is_finite()));
    }
}

#[test]
fn regeneration_is_bitwise_identical() {
    let s = pursuit();
    let (a, b) = (generate(&s, 42).unwrap(), generate(&s, 42).unwrap());
    assert_eq!(trajectory_to_csv(&a.trajectory), trajectory_to_csv(&b.trajectory));
    assert_eq!(a.epsilon, b.epsilon);
    assert_eq!(a.pure, b.pure);
}
