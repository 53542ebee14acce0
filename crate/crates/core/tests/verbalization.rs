use proptest::prelude::*;

use igame_core::dynamics::{ControlSignal, SignalRole, TimeGrid, Trajectory};
use igame_core::verbalization::{
    check_synlinguism, fit_recursion, partition_cost, segment_trajectory, Partition, PictureTag,
    WordSequence,
};

/// Direct squared deviation from each segment mean plus the per-break penalty.
fn brute_cost(values: &[f64], b: &[usize], penalty: f64) -> f64 {
    let mut total = 0.0;
    for j in 0..b.len() - 1 {
        let end = if j + 2 == b.len() { values.len() } else { b[j + 1] };
        let seg = &values[b[j]..end];
        let mean = seg.iter().sum::<f64>() / seg.len() as f64;
        total += seg.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    }
    total + penalty * (b.len() - 2) as f64
}

fn all_partitions(n_steps: usize, min_len: usize) -> Vec<Vec<usize>> {
    fn go(n_steps: usize, min_len: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *prefix.last().unwrap();
        if n_steps - last + 1 >= min_len {
            out.push(prefix.iter().copied().chain([n_steps]).collect());
        }
        for next in last + min_len..n_steps {
            prefix.push(next);
            go(n_steps, min_len, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(n_steps, min_len, &mut vec![0], &mut out);
    out
}

fn series() -> impl Strategy<Value = (Vec<f64>, usize)> {
    (4usize..18, 2usize..5).prop_flat_map(|(n_steps, min_len)| {
        (prop::collection::vec(prop_oneof![-1.0..1.0f64, 3.0..4.0f64], n_steps + 1), Just(min_len))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn segmentation_is_optimal((values, min_len) in series(), penalty in 0.0..3.0f64) {
        let n_steps = values.len() - 1;
        prop_assume!(n_steps + 1 >= 2 * min_len);
        let grid = TimeGrid::new(0.0, 1.0, n_steps).unwrap();
        let driver = ControlSignal::new(grid, values.iter().map(|v| vec![*v]).collect(), SignalRole::Epsilon).unwrap();
        let traj = Trajectory::new(grid, vec![vec![0.0]; n_steps + 1], None).unwrap();
        let p = segment_trajectory(&traj, &driver, penalty, min_len).unwrap();
        p.validate(n_steps).unwrap();
        let got = brute_cost(&values, &p.breakpoints, penalty);
        let lib = partition_cost(&driver, &p, penalty).unwrap();
        prop_assert!((got - lib).abs() <= 1e-9 * (1.0 + got));
        let best = all_partitions(n_steps, min_len)
            .iter()
            .map(|b| brute_cost(&values, b, penalty))
            .fold(f64::INFINITY, f64::min);
        prop_assert!((got - best).abs() <= 1e-9 * (1.0 + best), "{got} vs {best}");
    }

    #[test]
    fn affine_recursions_are_recovered(
        a in -0.9..0.9f64, b in -2.0..2.0f64, c in -2.0..2.0f64, off in -1.0..1.0f64,
        w0 in -1.0..1.0f64,
        tactics in prop::collection::vec(-1.0..1.0f64, 10),
        feats in prop::collection::vec(-1.0..1.0f64, 10),
    ) {
        let mut words = vec![vec![w0]];
        for k in 1..10 {
            words.push(vec![a * words[k - 1][0] + b * tactics[k] + c * feats[k] + off]);
        }
        let model = fit_recursion(
            &WordSequence::continuous(words, PictureTag::S),
            &WordSequence::continuous(tactics.iter().map(|t| vec![*t]).collect(), PictureTag::S),
            &feats.iter().map(|f| vec![*f]).collect::<Vec<_>>(),
            0.0,
            1e-8,
        ).unwrap();
        prop_assert!(model.verbalizable, "residual {:e}", model.max_residual());
    }

    #[test]
    fn synlinguism_is_symmetric(
        w in prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 2), 1..8),
        bump in 0usize..8,
        size in 0.0..1e-6f64,
    ) {
        let mut other = w.clone();
        let j = bump % w.len();
        other[j][0] += size;
        let s = WordSequence::continuous(w.clone(), PictureTag::S);
        let d = WordSequence::continuous(other, PictureTag::D);
        let tol = 5e-7;
        let sd = check_synlinguism(&s, &d, tol).unwrap();
        let ds = check_synlinguism(&d, &s, tol).unwrap();
        prop_assert_eq!(&sd, &ds);
        prop_assert!(check_synlinguism(&s, &s, 0.0).unwrap().synlinguistic);
        prop_assert_eq!(sd.first_mismatch, (size > tol).then_some(j));
    }
}

#[test]
fn single_segment_has_no_recursion() {
    let words = WordSequence::continuous(vec![vec![1.0]], PictureTag::S);
    assert!(fit_recursion(&words, &words, &[vec![0.0]], 0.0, 1e-9).is_err());
}

#[test]
fn partition_rules() {
    assert!(Partition::new(vec![0, 5, 10], 3, 10).is_ok());
    // closing segment keeps the end node: 9..=10 holds two nodes
    assert!(Partition::new(vec![0, 9, 10], 2, 10).is_ok());
    assert!(Partition::new(vec![0, 9, 10], 3, 10).is_err());
    assert!(Partition::new(vec![0, 6, 6, 10], 2, 10).is_err());
    assert!(Partition::new(vec![1, 10], 2, 10).is_err());
}

#[test]
fn infinite_penalty_keeps_one_segment() {
    let grid = TimeGrid::new(0.0, 1.0, 40).unwrap();
    let values = (0..=40).map(|k| vec![if k < 20 { 0.0 } else { 9.0 }]).collect();
    let driver = ControlSignal::new(grid, values, SignalRole::Epsilon).unwrap();
    let traj = Trajectory::new(grid, vec![vec![0.0]; 41], None).unwrap();
    let p = segment_trajectory(&traj, &driver, f64::INFINITY, 2).unwrap();
    assert_eq!(p.breakpoints, vec![0, 40]);
}

#[test]
fn independent_random_words_are_not_verbalizable() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
    let mut draw = || -> Vec<Vec<f64>> { (0..50).map(|_| vec![rng.random_range(-1.0..1.0)]).collect() };
    let (words, tactics, feats) = (draw(), draw(), draw());
    let model = fit_recursion(
        &WordSequence::continuous(words, PictureTag::S),
        &WordSequence::continuous(tactics, PictureTag::S),
        &feats,
        0.0,
        1e-6,
    )
    .unwrap();
    assert!(!model.verbalizable);
    assert!(model.max_residual() > 0.1);
}
