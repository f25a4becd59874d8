mod common;

use common::example_config;
use proptest::prelude::*;
use qtwin::experiment::{measure_with_shots, PopulationResult};
use qtwin::gateset::{ideal_gate, Address};
use qtwin::qcore::unitary_fidelity;
use qtwin::optim::LbfgsOptions;
use qtwin::workflows::run_optimal_control;
use qtwin::Experiment64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::FRAC_PI_2;

fn seq(gates: &[&str]) -> Vec<String> {
    gates.iter().map(|g| g.to_string()).collect()
}

fn calibrated(overrides: &[&str]) -> Experiment64 {
    let cfg = example_config(overrides);
    let mut exp = cfg.experiment().unwrap();
    run_optimal_control(&mut exp, cfg.opt_map.clone(), &LbfgsOptions::default()).unwrap();
    exp
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn populations_are_probability_vectors(x in prop::collection::vec(-1.0..1.0f64, 4)) {
        let cfg = example_config(&[]);
        let mut exp = cfg.experiment().unwrap();
        exp.set_opt_map(cfg.opt_map.clone()).unwrap();
        exp.set_parameters(&x).unwrap();
        let seqs = vec![seq(&[]), seq(&["rx90p[0]"]), seq(&["rx90p[0]", "ry90m[0]", "rx90m[0]", "ry90p[0]", "rx90p[0]"])];
        for p in exp.simulate_sequences(&seqs).unwrap() {
            prop_assert!(p.pops.iter().all(|&v| v >= 0.0));
            prop_assert!((p.pops.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn empty_sequence_stays_in_ground_state() {
    let mut exp = example_config(&[]).experiment().unwrap();
    let p = &exp.simulate_sequences(&[vec![]]).unwrap()[0];
    assert_eq!(p.pops, vec![1.0, 0.0, 0.0]);
    assert_eq!(p.labels, vec!["0", "1", "2"]);
}

#[test]
fn zero_amplitude_resonant_gates_are_identity() {
    let mut exp = example_config(&["gateset.envelope.amp.min=0", "gateset.envelope.amp.value=0"]).experiment().unwrap();
    let sub = exp.subspace(0);
    for (name, u) in exp.compute_propagators().unwrap().clone() {
        let f = unitary_fidelity(&u, &qtwin::CMatrix::identity(3, 3), &sub).unwrap();
        assert!(f > 1.0 - 1e-9, "{name}: {f}");
    }
}

#[test]
fn two_x90_pulses_flip_with_small_leakage() {
    let mut exp = calibrated(&[]);
    let p = &exp.simulate_sequences(&[seq(&["rx90p[0]", "rx90p[0]"])]).unwrap()[0];
    assert!(p.pops[1] > 0.99, "{:?}", p.pops);
    assert!(p.pops[2] > 0.0 && p.pops[2] < 1e-2, "{:?}", p.pops);
}

#[test]
fn drag_correction_reduces_leakage() {
    let mut exp = calibrated(&[]);
    let flip = [seq(&["rx90p[0]", "rx90p[0]"])];
    let with_drag = exp.simulate_sequences(&flip).unwrap()[0].pops[2];
    let delta: Vec<Address> = exp.pmap().opt_map()[1].clone();
    for a in &delta {
        exp.pmap_mut().quantity_mut(a).unwrap().set_value(0.0).unwrap();
    }
    let without = exp.simulate_sequences(&flip).unwrap()[0].pops[2];
    assert!(without > with_drag, "leakage {without} without DRAG vs {with_drag} with");
}

#[test]
fn quarter_turn_drive_phase_turns_x_into_y() {
    let exp = calibrated(&["model.qubits.0.hilbert_dim=2", "blackbox.state_labels=[[1]]", "model_learning.state_labels=[[1]]"]);
    assert!(exp.clone().gateset_infidelity().unwrap() < 1e-6);
    let mut shifted = exp.pmap().instruction("rx90p[0]").unwrap().clone();
    let xy = &mut shifted.channels.get_mut("d1").unwrap().envelope.xy_angle;
    xy.set_value(xy.value() + FRAC_PI_2).unwrap();
    let u = exp.gate_propagator(&shifted).unwrap();
    let f = unitary_fidelity(&u, &ideal_gate::<f64>("ry90p[0]").unwrap(), &exp.subspace(0)).unwrap();
    assert!(f > 1.0 - 1e-6, "fidelity {f}");
}

#[test]
fn shot_noise_scales_as_inverse_sqrt_shots() {
    let pops = PopulationResult { pops: vec![0.8, 0.15, 0.05], labels: vec!["0".into(), "1".into(), "2".into()] };
    let spread = |shots: usize| {
        let xs: Vec<f64> = (0..2000)
            .map(|s| measure_with_shots(&pops, &[1, 2], shots, &mut ChaCha8Rng::seed_from_u64(s)).unwrap().result)
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    };
    let s: Vec<f64> = [100, 1000, 10000].iter().map(|&n| spread(n)).collect();
    for (i, n) in [100.0f64, 1000.0, 10000.0].iter().enumerate() {
        let binomial = (0.2 * 0.8 / n).sqrt();
        assert!((s[i] / binomial - 1.0).abs() < 0.2, "shots {n}: {} vs {binomial}", s[i]);
    }
    for w in s.windows(2) {
        assert!((w[0] / w[1] / 10f64.sqrt() - 1.0).abs() < 0.2);
    }
}

#[test]
fn reference_pulse_gives_mid_range_orbit_error() {
    let cfg = example_config(&[
        "gateset.envelope.amp.value=0.376655",
        "gateset.envelope.delta.value=-0.954644",
        "gateset.envelope.freq_offset.value=-50.333e6",
        "gateset.envelope.framechange.value=-0.001479",
    ]);
    let mut exp = cfg.experiment().unwrap();
    exp.pmap_mut().quantity_mut(&Address::model("Q1", "freq")).unwrap().set_value(5.001e9).unwrap();
    let table = qtwin::workflows::CliffordTable::build(0).unwrap();
    let seqs = table.single_length_rb(200, 5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let pops = exp.simulate_sequences(&seqs).unwrap();
    let mean = pops.iter().map(|p| p.population_of(&[1, 2])).sum::<f64>() / pops.len() as f64;
    assert!((0.14..=0.26).contains(&mean), "mean error population {mean}");
}
