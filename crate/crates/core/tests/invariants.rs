use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qmeasure::measurement::{mark, MeasurementBasis};
use qmeasure::state::{
    born_probabilities, mix, random_channel, random_density, random_povm, random_state,
    random_unitary, trace_distance, unitarity_deviation, CMatrix, StateVector, SubsystemLayout,
};

fn layout_from(dims: &[usize]) -> SubsystemLayout {
    SubsystemLayout::new(dims.iter().enumerate().map(|(i, &d)| (format!("f{i}"), d))).unwrap()
}

/// Reference partial trace: a ⊗ b written out explicitly and summed over b.
fn trace_out_second(rho: &CMatrix, da: usize, db: usize) -> CMatrix {
    CMatrix::from_fn(da, da, |i, j| (0..db).map(|k| rho[(i * db + k, j * db + k)]).sum())
}

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=4, 1..=4)
        .prop_filter("total dimension at most 64", |d| d.iter().product::<usize>() <= 64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_of_product_recovers_factor(da in 1usize..=5, db in 1usize..=5, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_density(&SubsystemLayout::single("a", da).unwrap(), da, &mut rng).unwrap();
        let b = random_density(&SubsystemLayout::single("b", db).unwrap(), db, &mut rng).unwrap();
        let joint = qmeasure::state::kron(a.matrix(), b.matrix());
        let layout = SubsystemLayout::new([("a", da), ("b", db)]).unwrap();
        let rho = qmeasure::state::DensityMatrix::new(layout, joint).unwrap();
        let got = rho.partial_trace(&["a"]).unwrap();
        prop_assert!(got.max_entry_diff(&a).unwrap() <= 1e-12);
        let two_factor = trace_out_second(rho.matrix(), da, db);
        prop_assert!((got.matrix() - two_factor).iter().all(|z| z.norm() <= 1e-12));
    }

    #[test]
    fn partial_trace_is_consistent_in_stages(dims in dims_strategy(), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = layout_from(&dims);
        let rho = random_density(&layout, 2, &mut rng).unwrap();
        let labels = layout.labels();
        let direct = rho.partial_trace(&labels[..1]).unwrap();
        let staged = rho
            .partial_trace(&labels)
            .unwrap()
            .partial_trace(&labels[..1])
            .unwrap();
        prop_assert!(direct.max_entry_diff(&staged).unwrap() <= 1e-12);
        prop_assert!((direct.trace().re - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn pure_reduced_matches_density_trace(dims in dims_strategy(), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = layout_from(&dims);
        let psi = random_state(&layout, &mut rng);
        let labels = layout.labels();
        let keep: Vec<&str> = labels.iter().rev().step_by(2).copied().collect();
        let a = psi.reduced(&keep).unwrap();
        let b = psi.to_density().partial_trace(&keep).unwrap();
        prop_assert!(a.max_entry_diff(&b).unwrap() <= 1e-12);
    }

    #[test]
    fn trace_distance_triangle(d in 2usize..=4, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = SubsystemLayout::single("s", d).unwrap();
        let r: Vec<_> = (0..3).map(|k| random_density(&l, 1 + k % d, &mut rng).unwrap()).collect();
        let ab = trace_distance(&r[0], &r[1]).unwrap();
        let bc = trace_distance(&r[1], &r[2]).unwrap();
        let ac = trace_distance(&r[0], &r[2]).unwrap();
        prop_assert!(ac <= ab + bc + 1e-10);
        prop_assert!((ab - trace_distance(&r[1], &r[0]).unwrap()).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn born_is_linear_in_the_state(w in 0.0f64..=1.0, n in 2usize..=5, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = SubsystemLayout::single("s", 3).unwrap();
        let (x, y) = (random_state(&l, &mut rng), random_state(&l, &mut rng));
        let m = random_povm(3, n, &mut rng).unwrap();
        let p = born_probabilities(&mix(&[(w, x.clone()), (1.0 - w, y.clone())]).unwrap(), &m).unwrap();
        let px = born_probabilities(&x.to_density(), &m).unwrap();
        let py = born_probabilities(&y.to_density(), &m).unwrap();
        for k in 0..n {
            prop_assert!((p[k] - (w * px[k] + (1.0 - w) * py[k])).abs() <= 1e-10);
        }
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn channels_keep_states_valid(d in 1usize..=4, k in 1usize..=4, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = SubsystemLayout::single("s", d).unwrap();
        let ch = random_channel(d, k, &mut rng).unwrap();
        prop_assert!(ch.completeness_deviation() <= 1e-10);
        let out = ch.apply(&random_density(&l, d, &mut rng).unwrap()).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() <= 1e-10);
        prop_assert!(out.eigenvalues()[0] >= -1e-10);
    }

    #[test]
    fn marking_preserves_norm_and_weights(d in 2usize..=4, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_unitary(d, &mut rng);
        prop_assert!(unitarity_deviation(&u) <= 1e-10);
        let basis = MeasurementBasis::from_unitary(&u, (0..d).map(|i| format!("b{i}")).collect()).unwrap();
        let psi = random_state(&SubsystemLayout::single("s", d).unwrap(), &mut rng);
        let ms = mark(&psi, &basis, d).unwrap();
        prop_assert!((ms.joint().norm() - 1.0).abs() <= 1e-12);
        let marker = ms.joint().reduced(&[ms.marker_label()]).unwrap().diagonal();
        let born: Vec<f64> = basis.coefficients(psi.amplitudes()).iter().map(|z| z.norm_sqr()).collect();
        for i in 0..d {
            prop_assert!((marker[i] - born[i]).abs() <= 1e-12);
        }
    }
}

#[test]
fn bell_pair_is_entangled_but_locally_mixed() {
    let phi = StateVector::bell_phi("a", "b").unwrap();
    let ra = phi.reduced(&["a"]).unwrap();
    assert!((ra.purity() - 0.5).abs() < 1e-12);
    assert!((phi.to_density().purity() - 1.0).abs() < 1e-12);
}
