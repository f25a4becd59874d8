use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::calibration::{CalibrationRecord, Dataset};
use crate::experiment::Experiment;
use crate::gateset::OptMap;
use crate::optim::{cma_pre_lbfgs, CmaesOptions, LbfgsOptions, OptResult};
use crate::{Error, Result};

/// Which records of a dataset enter the loss.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Largest mean `results_std` first, ties by record index.
    #[default]
    HighStd,
    /// Evenly spaced over the record list.
    Even,
    /// Uniform without replacement, drawn once per run from `seed`.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningConfig {
    #[serde(default)]
    pub sampling: Sampling,
    /// Records taken from each named dataset.
    pub batch_sizes: BTreeMap<String, usize>,
    /// Excited states, one level index per qudit; their summed population is
    /// what the dataset's results measure.
    pub state_labels: Vec<Vec<usize>>,
    /// Model quantities to learn, e.g. `[["Q1", "freq"]]`.
    pub opt_map: OptMap,
    pub cma: CmaesOptions,
    #[serde(default)]
    pub lbfgs: LbfgsOptions,
    #[serde(default)]
    pub seed: u64,
}

/// Flat basis indices of per-qudit level labels.
pub fn label_indices(dims: &[usize], labels: &[Vec<usize>]) -> Result<Vec<usize>> {
    labels
        .iter()
        .map(|label| {
            if label.len() != dims.len() {
                return Err(Error::Shape(format!("state label {label:?} needs {} levels", dims.len())));
            }
            label.iter().zip(dims).try_fold(0, |acc, (&l, &d)| {
                if l >= d {
                    Err(Error::OutOfRange { index: l, dim: d })
                } else {
                    Ok(acc * d + l)
                }
            })
        })
        .collect()
}

/// Indices of `batch` records chosen by `sampling`.
pub fn select_records(records: &[CalibrationRecord], sampling: Sampling, batch: usize, seed: u64) -> Result<Vec<usize>> {
    let n = records.len();
    if n == 0 {
        return Err(Error::Empty("dataset records"));
    }
    if batch == 0 {
        return Err(Error::Precondition("batch size must be at least 1".into()));
    }
    let batch = batch.min(n);
    Ok(match sampling {
        Sampling::HighStd => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| records[b].mean_std().total_cmp(&records[a].mean_std()).then(a.cmp(&b)));
            idx.truncate(batch);
            idx
        }
        Sampling::Even => (0..batch).map(|k| k * n / batch).collect(),
        Sampling::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rand::seq::index::sample(&mut rng, n, batch).into_vec()
        }
    })
}

/// `(1/2N) Σ [((m − m̃)/σ)² − 1]` over paired measured/predicted values.
pub fn likelihood_loss(measured: &[f64], predicted: &[f64], std: &[f64]) -> Result<f64> {
    let n = measured.len();
    if n == 0 {
        return Err(Error::Empty("measurements"));
    }
    if predicted.len() != n || std.len() != n {
        return Err(Error::Shape(format!("{n} measurements, {} predictions, {} stds", predicted.len(), std.len())));
    }
    let mut sum = 0.0;
    for ((m, p), s) in measured.iter().zip(predicted).zip(std) {
        if !(*s > 0.0) {
            return Err(Error::Precondition(format!("measurement std must be positive, got {s}")));
        }
        let r = (m - p) / s;
        sum += r * r - 1.0;
    }
    Ok(sum / (2 * n) as f64)
}

/// Re-simulate every record at its own pulse parameters on `exp` and score
/// the agreement with the recorded results.
pub fn learning_loss(exp: &mut Experiment<f64>, records: &[&CalibrationRecord], excited: &[usize]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Empty("records"));
    }
    let (mut measured, mut predicted, mut std) = (Vec::new(), Vec::new(), Vec::new());
    for rec in records {
        exp.pmap_mut().set_values_at(&rec.opt_map, &rec.param_values())?;
        for pops in exp.simulate_sequences(&rec.seqs)? {
            predicted.push(pops.population_of(excited));
        }
        measured.extend_from_slice(&rec.results);
        std.extend_from_slice(&rec.results_std);
    }
    likelihood_loss(&measured, &predicted, &std)
}

#[derive(Clone, Debug)]
pub struct LearningOutcome {
    pub result: OptResult,
    /// Indices of the records used, per dataset name.
    pub selected: BTreeMap<String, Vec<usize>>,
}

/// Fit the model quantities in `cfg.opt_map` to the recorded data with the
/// CMA-ES → L-BFGS hybrid. On return `exp` holds the learned values; its
/// pulse parameters are left as they were.
pub fn run_model_learning(cfg: &LearningConfig, exp: &mut Experiment<f64>, datasets: &BTreeMap<String, Dataset>) -> Result<LearningOutcome> {
    let excited = label_indices(exp.pmap().model().dims(), &cfg.state_labels)?;
    if excited.is_empty() {
        return Err(Error::Empty("state_labels"));
    }
    let mut selected = BTreeMap::new();
    for (name, batch) in &cfg.batch_sizes {
        let ds = datasets.get(name).ok_or_else(|| Error::Unknown { kind: "dataset", name: name.clone() })?;
        selected.insert(name.clone(), select_records(&ds.records, cfg.sampling, *batch, cfg.seed)?);
    }
    let records: Vec<&CalibrationRecord> =
        selected.iter().flat_map(|(name, idx)| idx.iter().map(move |&i| &datasets[name].records[i])).collect();
    if records.is_empty() {
        return Err(Error::Empty("selected records"));
    }

    let mut work = exp.clone();
    work.set_opt_map(cfg.opt_map.clone())?;
    let x0 = work.get_parameters()?;
    let result = cma_pre_lbfgs(
        |x: &[f64]| {
            work.set_parameters(x)?;
            learning_loss(&mut work, &records, &excited)
        },
        &x0,
        &cfg.cma,
        &cfg.lbfgs,
    )?;
    exp.set_opt_map(cfg.opt_map.clone())?;
    exp.set_parameters(&result.best_x)?;
    Ok(LearningOutcome { result, selected })
}
