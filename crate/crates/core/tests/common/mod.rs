#![allow(dead_code)]

use qtwin::config::RunConfig;
use qtwin::model::DeviceModel;
use qtwin::{CMatrix, C64};

pub const EXAMPLE_CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/single_qubit.json");

pub fn example_config(overrides: &[&str]) -> RunConfig {
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    RunConfig::load(EXAMPLE_CONFIG, &overrides).expect("example config loads")
}

pub fn example_model() -> DeviceModel {
    DeviceModel::from_spec(example_config(&[]).model).unwrap()
}

/// Lab-frame slices `H0 + c(t_j) Hc` at the midpoints of `n` slices of `dt`.
pub fn drive_slices(model: &DeviceModel, n: usize, dt: f64, c: impl Fn(f64) -> f64) -> Vec<CMatrix<f64>> {
    let h0 = model.drift_hamiltonian::<f64>();
    let hc = model.control_hamiltonian::<f64>("d1").unwrap();
    (0..n).map(|j| &h0 + &hc * C64::new(c((j as f64 + 0.5) * dt), 0.0)).collect()
}

pub fn sequential_product(factors: &[CMatrix<f64>]) -> CMatrix<f64> {
    factors.iter().fold(CMatrix::identity(factors[0].nrows(), factors[0].nrows()), |acc, u| u * acc)
}
