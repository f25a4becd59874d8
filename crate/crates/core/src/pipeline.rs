//! End-to-end stages driven by a [`RunConfig`], each writing its artifacts
//! under its own directory of the output root:
//!
//! | stage | directory | artifacts |
//! |---|---|---|
//! | optimal control | `better_X90/` | `gateset.json`, `params.json`, `log.jsonl`, `summary.json` |
//! | calibration | `ORBIT_cal/` | `dataset.json`, `params.json`, `log.jsonl`, `generations.csv`, `summary.json` |
//! | model learning | `simple_model_learning/` | `learned.json`, `log.jsonl`, `trajectory.csv`, `summary.json` |
//!
//! Every random stream of a run is derived from the config's top-level seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::experiment::Experiment;
use crate::gateset::{Address, Instruction, InstructionSpec, OptMap};
use crate::model::Quantity;
use crate::optim::OptResult;
use crate::workflows::{quantities_at, run_calibration, run_model_learning, run_optimal_control, Dataset};
use crate::{Error, Result};

pub const C1_DIR: &str = "better_X90";
pub const C2_DIR: &str = "ORBIT_cal";
pub const C3_DIR: &str = "simple_model_learning";

/// Name of the dataset the learning stage reads calibration records from.
pub const ORBIT_DATASET: &str = "orbit";

/// Independent seed streams of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Seeds {
    pub orbit: u64,
    pub calibration: u64,
    pub blackbox: u64,
    pub learning: u64,
}

impl Seeds {
    pub fn derive(root: u64) -> Self {
        let stream = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(root);
            rng.set_stream(k);
            rng.next_u64()
        };
        Self { orbit: stream(1), calibration: stream(2), blackbox: stream(3), learning: stream(4) }
    }
}

/// One parameter group: its addresses and current physical value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub addresses: Vec<Address>,
    pub quantity: Quantity,
}

fn param_entries(opt_map: &OptMap, values: &[Quantity]) -> Vec<ParamEntry> {
    opt_map.iter().zip(values).map(|(g, q)| ParamEntry { addresses: g.clone(), quantity: q.clone() }).collect()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn write_log(path: &Path, result: &OptResult) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    result.write_jsonl(BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

fn stage_dir(out: &Path, name: &str) -> Result<PathBuf> {
    let dir = out.join(name);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

/// Instructions saved by the optimal-control stage.
pub fn read_gateset(path: impl AsRef<Path>) -> Result<Vec<Instruction>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let specs: Vec<InstructionSpec> = serde_path_to_error::deserialize(&mut serde_json::Deserializer::from_str(&text))
        .map_err(|e| Error::Config { path: format!("{}: {}", path.display(), e.path()), msg: e.into_inner().to_string() })?;
    specs.into_iter().map(Instruction::from_spec).collect()
}

#[derive(Clone, Debug)]
pub struct OptimalControlSummary {
    pub initial_infidelity: f64,
    pub final_infidelity: f64,
    pub result: OptResult,
    pub params: Vec<Quantity>,
    pub gateset: Vec<InstructionSpec>,
}

/// Model-based optimal control of the configured gate-set.
pub fn run_optimal_control_stage(cfg: &RunConfig, out: &Path) -> Result<OptimalControlSummary> {
    let dir = stage_dir(out, C1_DIR)?;
    let mut exp = cfg.experiment()?;
    exp.set_opt_map(cfg.opt_map.clone())?;
    let initial_infidelity = exp.gateset_infidelity()?;
    let result = run_optimal_control(&mut exp, cfg.opt_map.clone(), &cfg.optimal_control.lbfgs)?;
    let final_infidelity = exp.gateset_infidelity()?;
    let params = exp.pmap().get_values()?;
    let gateset = RunConfig::instruction_specs(&exp);

    write_json(&dir.join("gateset.json"), &gateset)?;
    write_json(&dir.join("params.json"), &param_entries(&cfg.opt_map, &params))?;
    write_log(&dir.join("log.jsonl"), &result)?;
    write_json(
        &dir.join("summary.json"),
        &json!({
            "initial_infidelity": initial_infidelity,
            "final_infidelity": final_infidelity,
            "n_evals": result.n_evals,
            "termination": result.termination,
        }),
    )?;
    Ok(OptimalControlSummary { initial_infidelity, final_infidelity, result, params, gateset })
}

#[derive(Clone, Debug)]
pub struct CalibrationSummary {
    /// ORBIT loss of the starting pulses, measured on the emulated device.
    pub initial_loss: f64,
    pub best_loss: f64,
    pub result: OptResult,
    pub best_params: Vec<Quantity>,
    /// Gate-set infidelity of the best pulses on the emulated device.
    pub device_infidelity: f64,
    pub dataset: Dataset,
}

/// Closed-loop calibration against the emulated device, starting from
/// `instructions` (typically the optimal-control result).
pub fn run_calibration_stage(cfg: &RunConfig, instructions: Vec<Instruction>, out: &Path) -> Result<CalibrationSummary> {
    let dir = stage_dir(out, C2_DIR)?;
    let seeds = Seeds::derive(cfg.seed);
    let mut exp = cfg.experiment_with(instructions)?;
    exp.set_opt_map(cfg.opt_map.clone())?;
    let template = exp.pmap().get_values()?;
    let gateset = RunConfig::instruction_specs(&exp);

    let mut device = cfg.blackbox(exp, seeds.blackbox)?;
    let mut orbit = cfg.calibration.orbit.clone();
    orbit.seed = seeds.orbit;
    let mut cma = cfg.calibration.cma.clone();
    cma.seed = seeds.calibration;
    let outcome = run_calibration(&mut device, &template, &cfg.opt_map, &cma, &orbit, gateset)?;

    let first = outcome.dataset.records.first().ok_or(Error::Empty("calibration records"))?;
    let initial_loss = first.results.iter().sum::<f64>() / first.results.len() as f64;
    let mut truth = device.experiment().clone();
    truth.set_opt_map(cfg.opt_map.clone())?;
    truth.pmap_mut().set_values(&outcome.best_params.iter().map(Quantity::value).collect::<Vec<_>>())?;
    let device_infidelity = truth.gateset_infidelity()?;

    outcome.dataset.write(dir.join("dataset.json"))?;
    write_json(&dir.join("params.json"), &param_entries(&cfg.opt_map, &outcome.best_params))?;
    write_log(&dir.join("log.jsonl"), &outcome.result)?;
    write_text(&dir.join("generations.csv"), &generations_csv(&outcome.result))?;
    write_json(
        &dir.join("summary.json"),
        &json!({
            "initial_loss": initial_loss,
            "best_loss": outcome.result.best_f,
            "device_infidelity": device_infidelity,
            "n_evals": outcome.result.n_evals,
            "termination": outcome.result.termination,
        }),
    )?;
    Ok(CalibrationSummary {
        initial_loss,
        best_loss: outcome.result.best_f,
        result: outcome.result,
        best_params: outcome.best_params,
        device_infidelity,
        dataset: outcome.dataset,
    })
}

fn generations_csv(result: &OptResult) -> String {
    let mut s = String::from("iter,fevals,iteration_best,best_f,sigma\n");
    for r in &result.history {
        let sigma = r.sigma.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{}", r.iter, r.fevals, r.iteration_best(), r.best_f, sigma);
    }
    s
}

#[derive(Clone, Debug)]
pub struct LearningSummary {
    pub initial: Vec<Quantity>,
    pub learned: Vec<Quantity>,
    pub result: OptResult,
    pub selected: BTreeMap<String, Vec<usize>>,
}

/// Fit the model quantities of `model_learning.opt_map` to a calibration
/// dataset. The simulation starts from the configured model, not from the
/// device's hidden values.
pub fn run_learning_stage(cfg: &RunConfig, dataset: Dataset, out: &Path) -> Result<LearningSummary> {
    let dir = stage_dir(out, C3_DIR)?;
    let seeds = Seeds::derive(cfg.seed);
    let instructions = dataset.metadata.gateset.iter().cloned().map(Instruction::from_spec).collect::<Result<Vec<_>>>()?;
    let mut exp = cfg.experiment_with(instructions)?;
    let learn_map = cfg.model_learning.opt_map.clone();
    let initial = values_of(&exp, &learn_map)?;

    let mut lc = cfg.model_learning.clone();
    lc.seed = seeds.learning;
    lc.cma.seed = seeds.learning;
    let datasets = BTreeMap::from([(ORBIT_DATASET.to_string(), dataset)]);
    let outcome = run_model_learning(&lc, &mut exp, &datasets)?;
    let learned = values_of(&exp, &learn_map)?;

    write_json(&dir.join("learned.json"), &param_entries(&learn_map, &learned))?;
    write_log(&dir.join("log.jsonl"), &outcome.result)?;
    write_text(&dir.join("trajectory.csv"), &trajectory_csv(&outcome.result, &learn_map, &initial)?)?;
    write_json(
        &dir.join("summary.json"),
        &json!({
            "initial": initial.iter().map(Quantity::value).collect::<Vec<_>>(),
            "learned": learned.iter().map(Quantity::value).collect::<Vec<_>>(),
            "best_loss": outcome.result.best_f,
            "n_evals": outcome.result.n_evals,
            "termination": outcome.result.termination,
            "selected": outcome.selected,
        }),
    )?;
    Ok(LearningSummary { initial, learned, result: outcome.result, selected: outcome.selected })
}

fn values_of(exp: &Experiment<f64>, opt_map: &OptMap) -> Result<Vec<Quantity>> {
    opt_map.iter().map(|g| exp.pmap().quantity(&g[0]).cloned()).collect()
}

/// Per iteration: the physical values of its best candidate.
fn trajectory_csv(result: &OptResult, opt_map: &OptMap, template: &[Quantity]) -> Result<String> {
    let mut s = String::from("iter,phase,fevals,iteration_best,best_f");
    for g in opt_map {
        let _ = write!(s, ",{}", g[0].to_string().replace(',', "-"));
    }
    s.push('\n');
    for r in &result.history {
        let Some(best) = r.candidates.iter().min_by(|a, b| a.f.total_cmp(&b.f)) else { continue };
        let phase = serde_json::to_value(r.phase)?;
        let _ = write!(s, "{},{},{},{},{}", r.iter, phase.as_str().unwrap_or_default(), r.fevals, best.f, r.best_f);
        for q in quantities_at(template, &best.x_scaled)? {
            let _ = write!(s, ",{}", q.value());
        }
        s.push('\n');
    }
    Ok(s)
}

/// Gate-set infidelity of `instructions` on the configured model without
/// running any optimizer.
pub fn evaluate_gateset(cfg: &RunConfig, instructions: Vec<Instruction>) -> Result<f64> {
    cfg.experiment_with(instructions)?.gateset_infidelity()
}

/// Exact level populations of `seqs` on the configured model, each
/// starting from the ground state.
pub fn simulate(cfg: &RunConfig, instructions: Vec<Instruction>, seqs: &[Vec<String>]) -> Result<Vec<Vec<f64>>> {
    let mut exp = cfg.experiment_with(instructions)?;
    Ok(exp.simulate_sequences(seqs)?.into_iter().map(|p| p.pops).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_streams_are_distinct_and_reproducible() {
        let s = Seeds::derive(7);
        assert_eq!(s, Seeds::derive(7));
        assert_ne!(s, Seeds::derive(8));
        let all = [s.orbit, s.calibration, s.blackbox, s.learning];
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(all[i], all[j]);
            }
        }
    }
}
