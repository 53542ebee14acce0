use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

use igame_core::quantum::{
    build_hamiltonian, evolve_slow, ladder_operators, FockSpace, HamiltonianSpec, QuantumOperator,
    QuantumState,
};

fn dense(op: &QuantumOperator) -> DMatrix<Complex64> {
    DMatrix::from_fn(op.dim, op.dim, |r, c| op.get(r, c))
}

fn spec_strategy() -> impl Strategy<Value = (HamiltonianSpec, u32)> {
    (1usize..4, 1u32..4).prop_flat_map(|(modes, cutoff)| {
        (
            prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), modes * modes),
            prop::collection::vec(-0.3..0.3f64, modes * modes * modes),
            Just(modes),
            Just(cutoff),
        )
            .prop_map(|(w, g, modes, cutoff)| {
                let mut omega = vec![vec![Complex64::new(0.0, 0.0); modes]; modes];
                for i in 0..modes {
                    omega[i][i] = Complex64::new(w[i * modes + i].0, 0.0);
                    for j in i + 1..modes {
                        let z = Complex64::new(w[i * modes + j].0, w[i * modes + j].1);
                        omega[i][j] = z;
                        omega[j][i] = z.conj();
                    }
                }
                let vertex = (0..modes)
                    .map(|a| (0..modes).map(|b| (0..modes).map(|c| g[(a * modes + b) * modes + c]).collect()).collect())
                    .collect();
                (HamiltonianSpec { omega, vertex }, cutoff)
            })
    })
}

fn unit_state(dim: usize, raw: &[(f64, f64)]) -> QuantumState {
    let psi: Vec<Complex64> = (0..dim).map(|i| Complex64::new(raw[i % raw.len()].0, raw[i % raw.len()].1 + i as f64 * 0.01)).collect();
    let n = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    QuantumState::new(psi.iter().map(|z| z / n).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn canonical_commutators_hold_below_cutoff(modes in 1usize..4, cutoff in 1u32..4) {
        let space = FockSpace::new(modes, cutoff).unwrap();
        let (a, ad) = ladder_operators(&space);
        for al in 0..modes {
            prop_assert!((dense(&a[al]).adjoint() - dense(&ad[al])).iter().all(|z| z.norm() == 0.0));
            for be in 0..modes {
                let c = dense(&a[al]) * dense(&ad[be]) - dense(&ad[be]) * dense(&a[al]);
                for i in (0..space.dim()).filter(|&i| space.occupations(i).iter().all(|&n| n < cutoff)) {
                    for r in 0..space.dim() {
                        let want = if al == be && r == i { 1.0 } else { 0.0 };
                        prop_assert!((c[(r, i)] - Complex64::new(want, 0.0)).norm() < 1e-12);
                    }
                }
                let aa = dense(&a[al]) * dense(&a[be]) - dense(&a[be]) * dense(&a[al]);
                prop_assert!(aa.iter().all(|z| z.norm() == 0.0));
            }
        }
    }

    #[test]
    fn evolution_matches_dense_exponential(
        (spec, cutoff) in spec_strategy(),
        raw in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..6),
        t in 0.0..3.0f64,
    ) {
        let space = FockSpace::new(spec.modes(), cutoff).unwrap();
        let h = build_hamiltonian(&spec, &space).unwrap();
        prop_assert!(h.hermitian_deviation() < 1e-12);
        let state = unit_state(space.dim(), &raw);
        let out = evolve_slow(&state, &h, t).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-10);

        let eig = dense(&h).symmetric_eigen();
        let phases = DMatrix::from_diagonal(&DVector::from_iterator(
            space.dim(),
            eig.eigenvalues.iter().map(|&l| Complex64::new(0.0, -l * t).exp()),
        ));
        let v = &eig.eigenvectors;
        let oracle = v * phases * v.adjoint() * DVector::from_vec(state.coefficients.clone());
        for (p, q) in oracle.iter().zip(&out.coefficients) {
            prop_assert!((p - q).norm() < 1e-9, "{p} vs {q}");
        }
    }

    #[test]
    fn evolution_composes((spec, cutoff) in spec_strategy(), t1 in 0.0..1.5f64, t2 in 0.0..1.5f64) {
        let space = FockSpace::new(spec.modes(), cutoff).unwrap();
        let h = build_hamiltonian(&spec, &space).unwrap();
        let s = unit_state(space.dim(), &[(0.3, 0.1), (-0.2, 0.7)]);
        let two = evolve_slow(&evolve_slow(&s, &h, t1).unwrap(), &h, t2).unwrap();
        let one = evolve_slow(&s, &h, t1 + t2).unwrap();
        for (p, q) in one.coefficients.iter().zip(&two.coefficients) {
            prop_assert!((p - q).norm() < 1e-10);
        }
    }
}

#[test]
fn zero_hamiltonian_is_identity() {
    let space = FockSpace::new(2, 2).unwrap();
    let spec = HamiltonianSpec::quadratic(vec![vec![Complex64::new(0.0, 0.0); 2]; 2]);
    assert!(spec.is_zero());
    let h = build_hamiltonian(&spec, &space).unwrap();
    let s = unit_state(space.dim(), &[(0.5, -0.5), (0.1, 0.2)]);
    assert_eq!(evolve_slow(&s, &h, 7.0).unwrap(), s);
}
