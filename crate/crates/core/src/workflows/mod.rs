//! The three stages: model-based optimal control, closed-loop calibration
//! with ORBIT sequences, and model learning from the calibration data.

mod calibration;
mod clifford;
mod learning;

pub use calibration::{
    orbit_loss, quantities_at, run_calibration, CalibrationOutcome, CalibrationRecord, Dataset, DatasetMetadata, OrbitConfig,
};
pub use clifford::{ideal_product, identity_fidelity, CliffordEntry, CliffordTable};
pub use learning::{
    label_indices, learning_loss, likelihood_loss, run_model_learning, select_records, LearningConfig, LearningOutcome, Sampling,
};

use crate::experiment::Experiment;
use crate::gateset::OptMap;
use crate::optim::{lbfgs_fd, LbfgsOptions, OptResult};
use crate::Result;

/// Minimize the gate-set infidelity over `opt_map` with finite-difference
/// L-BFGS; `exp` is left at the best point found.
pub fn run_optimal_control(exp: &mut Experiment<f64>, opt_map: OptMap, opts: &LbfgsOptions) -> Result<OptResult> {
    exp.set_opt_map(opt_map)?;
    let x0 = exp.get_parameters()?;
    let result = lbfgs_fd(
        |x: &[f64]| {
            exp.set_parameters(x)?;
            exp.gateset_infidelity()
        },
        &x0,
        opts,
    )?;
    exp.set_parameters(&result.best_x)?;
    Ok(result)
}
