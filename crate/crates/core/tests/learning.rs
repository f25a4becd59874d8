mod common;

use common::example_config;
use qtwin::experiment::SequenceRunner;
use qtwin::gateset::Address;
use qtwin::model::Quantity;
use qtwin::workflows::{learning_loss, quantities_at, CalibrationRecord, CliffordTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TRUE_FREQ: f64 = 5.001e9;

/// Records measured on the emulated device at random pulse settings.
fn device_records(seed: u64, n_records: usize) -> Vec<CalibrationRecord> {
    let cfg = example_config(&[]);
    let mut exp = cfg.experiment().unwrap();
    exp.set_opt_map(cfg.opt_map.clone()).unwrap();
    let template = exp.pmap().get_values().unwrap();
    let mut device = cfg.blackbox(exp, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seqs = CliffordTable::build(0).unwrap().single_length_rb(20, 5, &mut rng).unwrap();
    (0..n_records)
        .map(|_| {
            let x: Vec<f64> = (0..template.len()).map(|_| rng.random_range(-0.3..0.3)).collect();
            let params = quantities_at(&template, &x).unwrap();
            let values: Vec<f64> = params.iter().map(Quantity::value).collect();
            let ms = device.run_sequences(&values, &cfg.opt_map, &seqs, 1000).unwrap();
            CalibrationRecord {
                params,
                opt_map: cfg.opt_map.clone(),
                seqs: seqs.clone(),
                results: ms.iter().map(|m| m.result).collect(),
                results_std: ms.iter().map(|m| m.std).collect(),
                shots: ms.iter().map(|m| m.shots).collect(),
            }
        })
        .collect()
}

fn loss_at(freq: f64, records: &[CalibrationRecord]) -> f64 {
    let mut exp = example_config(&[]).experiment().unwrap();
    exp.pmap_mut().quantity_mut(&Address::model("Q1", "freq")).unwrap().set_value(freq).unwrap();
    let refs: Vec<&CalibrationRecord> = records.iter().collect();
    learning_loss(&mut exp, &refs, &[1, 2]).unwrap()
}

#[test]
fn loss_grid_is_minimal_at_the_true_frequency() {
    let datasets: Vec<Vec<CalibrationRecord>> = (1..=3).map(|s| device_records(s, 3)).collect();
    let grid: Vec<f64> = (0..21).map(|k| TRUE_FREQ + (k as f64 - 10.0) * 200e3).collect();
    let mean: Vec<f64> = grid.iter().map(|&f| datasets.iter().map(|d| loss_at(f, d)).sum::<f64>() / datasets.len() as f64).collect();
    let argmin = mean.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert_eq!(argmin, 10, "{mean:?}");
    assert!(mean[0] > mean[10] && mean[20] > mean[10]);
}

#[test]
fn loss_at_truth_is_near_zero() {
    let mut all = Vec::new();
    for s in 10..16 {
        all.extend(device_records(s, 4));
    }
    let n = all.iter().map(|r| r.results.len()).sum::<usize>() as f64;
    let f = loss_at(TRUE_FREQ, &all);
    // Residuals at the truth are close to unit normal, so each term z² − 1
    // has mean 0 and variance 2; f has spread sqrt(2N)/(2N).
    let spread = (2.0 * n).sqrt() / (2.0 * n);
    assert!(f.abs() < 4.0 * spread, "loss {f}, N {n}");
}

