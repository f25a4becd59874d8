mod common;

use common::{drive_slices, example_model, sequential_product};
use proptest::prelude::*;
use qtwin::qcore::{expm_hermitian_generator, frobenius_norm, propagate, slice_propagators, tree_product, unitarity_error};
use qtwin::{CMatrix, C64};
use std::f64::consts::TAU;

fn hermitian(dim: usize, entries: &[(f64, f64)]) -> CMatrix<f64> {
    let a = CMatrix::from_fn(dim, dim, |r, c| {
        let (re, im) = entries[r * dim + c];
        C64::new(re, im)
    });
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

fn hermitian_strategy(dim: usize) -> impl Strategy<Value = CMatrix<f64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim * dim).prop_map(move |e| hermitian(dim, &e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn slice_exponentials_are_unitary(h in hermitian_strategy(4), dt in 0.01..5.0f64) {
        let u = expm_hermitian_generator(&h, dt).unwrap();
        prop_assert!(unitarity_error(&u) < 1e-12);
    }

    #[test]
    fn exponent_adds_for_one_generator(h in hermitian_strategy(3), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let lhs = expm_hermitian_generator(&h, a).unwrap() * expm_hermitian_generator(&h, b).unwrap();
        let rhs = expm_hermitian_generator(&h, a + b).unwrap();
        prop_assert!(frobenius_norm(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn tree_matches_sequential_fold(hs in prop::collection::vec(hermitian_strategy(3), 1..40), dt in 0.01..1.0f64) {
        let us = slice_propagators(&hs, dt).unwrap();
        let seq = sequential_product(&us);
        let tree = tree_product(us).unwrap();
        prop_assert!(frobenius_norm(&(tree.clone() - seq)) < 1e-12);
        prop_assert!(unitarity_error(&tree) < 1e-12);
    }

    #[test]
    fn physical_drive_propagator_is_unitary(amp in 0.0..3.0e9f64, phase in 0.0..TAU, freq in 4.8e9..5.2e9f64) {
        let model = example_model();
        let (n, dt) = (700, 1e-11);
        let hs = drive_slices(&model, n, dt, |t| amp * (TAU * freq * t + phase).cos());
        let u = propagate(&hs, dt).unwrap();
        prop_assert!(unitarity_error(&u) < 1e-9);
    }
}

#[test]
fn reversed_order_differs_for_non_commuting_slices() {
    let model = example_model();
    let dt = 1e-11;
    let hs = drive_slices(&model, 64, dt, |t| 2e9 * (t * 3e9).sin());
    let forward = propagate(&hs, dt).unwrap();
    let mut rev = hs.clone();
    rev.reverse();
    let backward = propagate(&rev, dt).unwrap();
    assert!(frobenius_norm(&(forward - backward)) > 1e-3);
}

#[test]
fn zero_drive_is_free_evolution() {
    let model = example_model();
    let (n, dt) = (100, 1e-11);
    let u = propagate(&drive_slices(&model, n, dt, |_| 0.0), dt).unwrap();
    let expected = expm_hermitian_generator(&model.drift_hamiltonian::<f64>(), n as f64 * dt).unwrap();
    assert!(frobenius_norm(&(u - expected)) < 1e-10);
}
