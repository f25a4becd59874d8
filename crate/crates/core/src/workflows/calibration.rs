use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::clifford::CliffordTable;
use crate::experiment::SequenceRunner;
use crate::gateset::{InstructionSpec, OptMap};
use crate::model::Quantity;
use crate::optim::{minimize_cmaes, CmaesOptions, OptResult};
use crate::{Error, Result};

/// One evaluation of the calibration loop: pulse parameters and the
/// measured outcome of every sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationRecord {
    pub params: Vec<Quantity>,
    pub opt_map: OptMap,
    pub seqs: Vec<Vec<String>>,
    pub results: Vec<f64>,
    pub results_std: Vec<f64>,
    pub shots: Vec<usize>,
}

impl CalibrationRecord {
    pub fn validate(&self) -> Result<()> {
        let n = self.seqs.len();
        if self.results.len() != n || self.results_std.len() != n || self.shots.len() != n {
            return Err(Error::Shape(format!(
                "record has {n} sequences but {} results, {} stds, {} shot counts",
                self.results.len(),
                self.results_std.len(),
                self.shots.len()
            )));
        }
        if self.params.len() != self.opt_map.len() {
            return Err(Error::Shape(format!("{} params for {} opt_map groups", self.params.len(), self.opt_map.len())));
        }
        if let Some(r) = self.results.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::Precondition(format!("result {r} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn param_values(&self) -> Vec<f64> {
        self.params.iter().map(Quantity::value).collect()
    }

    pub fn mean_std(&self) -> f64 {
        if self.results_std.is_empty() {
            return 0.0;
        }
        self.results_std.iter().sum::<f64>() / self.results_std.len() as f64
    }
}

/// Settings of the ORBIT loss: how many sequences, of how many random
/// Cliffords, measured with how many shots, drawn from which seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitConfig {
    #[serde(default = "default_rb_number")]
    pub rb_number: usize,
    #[serde(default = "default_rb_length")]
    pub rb_length: usize,
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub target: usize,
}

fn default_rb_number() -> usize {
    20
}
fn default_rb_length() -> usize {
    5
}
fn default_shots() -> usize {
    1000
}

impl Default for OrbitConfig {
    fn default() -> Self {
        Self { rb_number: default_rb_number(), rb_length: default_rb_length(), shots: default_shots(), seed: 0, target: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMetadata {
    pub opt_map: OptMap,
    pub seed: u64,
    pub gateset: Vec<InstructionSpec>,
    pub orbit: OrbitConfig,
}

/// Everything measured during one calibration run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dataset {
    pub metadata: DatasetMetadata,
    pub records: Vec<CalibrationRecord>,
}

impl Dataset {
    pub fn validate(&self) -> Result<()> {
        self.records.iter().try_for_each(CalibrationRecord::validate)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let ds: Dataset = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::Config { path: e.path().to_string(), msg: e.inner().to_string() })?;
        ds.validate()?;
        Ok(ds)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Mean measured error population over `seqs` at physical `params`; the
/// evaluation is appended to `log`.
pub fn orbit_loss(
    runner: &mut dyn SequenceRunner,
    params: &[Quantity],
    opt_map: &OptMap,
    seqs: &[Vec<String>],
    shots: usize,
    log: &mut Vec<CalibrationRecord>,
) -> Result<f64> {
    if seqs.is_empty() {
        return Err(Error::Empty("ORBIT sequences"));
    }
    let values: Vec<f64> = params.iter().map(Quantity::value).collect();
    let ms = runner.run_sequences(&values, opt_map, seqs, shots)?;
    let loss = ms.iter().map(|m| m.result).sum::<f64>() / ms.len() as f64;
    log.push(CalibrationRecord {
        params: params.to_vec(),
        opt_map: opt_map.clone(),
        seqs: seqs.to_vec(),
        results: ms.iter().map(|m| m.result).collect(),
        results_std: ms.iter().map(|m| m.std).collect(),
        shots: ms.iter().map(|m| m.shots).collect(),
    });
    Ok(loss)
}

/// Quantities of `template` moved to the scaled coordinates `x` (clamped).
pub fn quantities_at(template: &[Quantity], x: &[f64]) -> Result<Vec<Quantity>> {
    if template.len() != x.len() {
        return Err(Error::Shape(format!("{} coordinates for {} parameters", x.len(), template.len())));
    }
    Ok(template
        .iter()
        .zip(x)
        .map(|(q, &s)| {
            let mut q = q.clone();
            q.set_scaled(s);
            q
        })
        .collect())
}

#[derive(Clone, Debug)]
pub struct CalibrationOutcome {
    pub result: OptResult,
    pub best_params: Vec<Quantity>,
    pub dataset: Dataset,
}

/// CMA-ES over the scaled coordinates of `template` (the starting pulse
/// parameters with their bounds), scoring each candidate by its ORBIT loss
/// on `runner`. One set of sequences is drawn from `orbit.seed` and reused
/// for every evaluation; each evaluation becomes one dataset record.
pub fn run_calibration(
    runner: &mut dyn SequenceRunner,
    template: &[Quantity],
    opt_map: &OptMap,
    cma: &CmaesOptions,
    orbit: &OrbitConfig,
    gateset: Vec<InstructionSpec>,
) -> Result<CalibrationOutcome> {
    if template.len() != opt_map.len() {
        return Err(Error::Shape(format!("{} parameters for {} opt_map groups", template.len(), opt_map.len())));
    }
    let table = CliffordTable::build(orbit.target)?;
    let mut rng = ChaCha8Rng::seed_from_u64(orbit.seed);
    let seqs = table.single_length_rb(orbit.rb_number, orbit.rb_length, &mut rng)?;
    let x0: Vec<f64> = template.iter().map(Quantity::get_scaled).collect();
    let mut records = Vec::new();
    let result = minimize_cmaes(
        |x: &[f64]| {
            let params = quantities_at(template, x)?;
            orbit_loss(runner, &params, opt_map, &seqs, orbit.shots, &mut records)
        },
        &x0,
        cma,
    )?;
    let best_params = quantities_at(template, &result.best_x)?;
    let dataset = Dataset { metadata: DatasetMetadata { opt_map: opt_map.clone(), seed: orbit.seed, gateset, orbit: orbit.clone() }, records };
    Ok(CalibrationOutcome { result, best_params, dataset })
}
