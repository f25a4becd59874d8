//! Run configuration: one JSON document describing the device model, the
//! electronics, the gate-set and the options of every stage.
//!
//! Unknown keys are rejected and errors name the offending JSON path.
//! `key.path=value` overrides are applied to the raw document before it is
//! checked, so they are validated like any other input.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::experiment::{Blackbox, Experiment};
use crate::gateset::{single_qubit_gateset, Address, Carrier, EnvelopeSpec, InstructionSpec, Instruction, OptMap, ParameterMap};
use crate::model::{DeviceModel, ModelSpec};
use crate::optim::{CmaesOptions, LbfgsOptions};
use crate::signals::{ChainSpec, SignalChain, DEFAULT_SIM_RATE};
use crate::workflows::{label_indices, LearningConfig, OrbitConfig};
use crate::{Error, Result};

/// The four-gate set on one qubit, all sharing one envelope template.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatesetConfig {
    pub channel: String,
    pub target: usize,
    pub t_final: f64,
    pub carrier: Carrier,
    pub envelope: EnvelopeSpec,
}

impl GatesetConfig {
    pub fn instructions(&self) -> Result<Vec<Instruction>> {
        single_qubit_gateset(&self.channel, self.target, self.t_final, &self.carrier, &self.envelope)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimalControlConfig {
    #[serde(default)]
    pub lbfgs: LbfgsOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    pub cma: CmaesOptions,
    #[serde(default)]
    pub orbit: OrbitConfig,
}

/// One hidden value of the emulated device.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Override {
    pub address: Address,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlackboxConfig {
    #[serde(default)]
    pub overrides: Vec<Override>,
    /// Levels counted as "excited" when measuring.
    pub state_labels: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub chain: ChainSpec,
    pub gateset: GatesetConfig,
    /// Pulse parameters tuned by optimal control and calibration.
    pub opt_map: OptMap,
    #[serde(default = "default_sim_rate")]
    pub sim_rate: f64,
    /// Root of every random stream of a run.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub optimal_control: OptimalControlConfig,
    pub calibration: CalibrationConfig,
    pub blackbox: BlackboxConfig,
    pub model_learning: LearningConfig,
}

fn default_sim_rate() -> f64 {
    DEFAULT_SIM_RATE
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn config_err(path: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::Config { path: path.into(), msg: msg.into() }
}

/// Set `dotted.path` in `doc` to `raw`, parsed as JSON when possible and
/// as a string otherwise. Array elements are addressed by index.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| config_err(assignment, "override must look like key.path=value"))?;
    if path.is_empty() {
        return Err(config_err(assignment, "empty key"));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let last = i + 1 == keys.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(key.to_string(), value);
                    return Ok(());
                }
                map.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = key.parse().map_err(|_| config_err(path, format!("`{key}` is not an array index")))?;
                let len = items.len();
                let slot = items.get_mut(idx).ok_or_else(|| config_err(path, format!("index {idx} out of range for length {len}")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(config_err(path, format!("`{key}` is below a non-container value"))),
        };
    }
    unreachable!("loop returns on the last key")
}

impl RunConfig {
    pub fn from_value(doc: Value) -> Result<Self> {
        let cfg: RunConfig = serde_path_to_error::deserialize(doc).map_err(|e| {
            let path = e.path().to_string();
            config_err(if path == "." { String::new() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: Value = serde_json::from_str(text).map_err(|e| config_err("", format!("malformed JSON: {e}")))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        Self::from_value(doc)
    }

    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, overrides)
    }

    /// Cross-section checks that serde cannot express; every error names
    /// the config path it concerns.
    pub fn validate(&self) -> Result<()> {
        let model = DeviceModel::from_spec(self.model.clone()).map_err(|e| config_err("model", e.to_string()))?;
        SignalChain::new(self.chain.clone()).map_err(|e| config_err("chain", e.to_string()))?;
        if !(self.sim_rate > 0.0) {
            return Err(config_err("sim_rate", "must be positive"));
        }
        let pmap = self.parameter_map().map_err(|e| config_err("gateset", e.to_string()))?;
        let mut check = pmap.clone();
        check.set_opt_map(self.opt_map.clone()).map_err(|e| config_err("opt_map", e.to_string()))?;
        for (i, o) in self.blackbox.overrides.iter().enumerate() {
            pmap.quantity(&o.address).map_err(|e| config_err(format!("blackbox.overrides[{i}].address"), e.to_string()))?;
        }
        label_indices(model.dims(), &self.blackbox.state_labels).map_err(|e| config_err("blackbox.state_labels", e.to_string()))?;
        label_indices(model.dims(), &self.model_learning.state_labels)
            .map_err(|e| config_err("model_learning.state_labels", e.to_string()))?;
        check.set_opt_map(self.model_learning.opt_map.clone()).map_err(|e| config_err("model_learning.opt_map", e.to_string()))?;
        self.calibration.cma.validate().map_err(|e| config_err("calibration.cma", e.to_string()))?;
        self.model_learning.cma.validate().map_err(|e| config_err("model_learning.cma", e.to_string()))?;
        self.optimal_control.lbfgs.validate().map_err(|e| config_err("optimal_control.lbfgs", e.to_string()))?;
        self.model_learning.lbfgs.validate().map_err(|e| config_err("model_learning.lbfgs", e.to_string()))?;
        Ok(())
    }

    pub fn parameter_map(&self) -> Result<ParameterMap> {
        let model = DeviceModel::from_spec(self.model.clone())?;
        ParameterMap::new(model, self.gateset.instructions()?)
    }

    /// Simulation experiment with the configured gate-set.
    pub fn experiment(&self) -> Result<Experiment<f64>> {
        self.experiment_with(self.gateset.instructions()?)
    }

    /// Simulation experiment with explicit instructions, e.g. those saved
    /// by an earlier stage.
    pub fn experiment_with(&self, instructions: Vec<Instruction>) -> Result<Experiment<f64>> {
        let model = DeviceModel::from_spec(self.model.clone())?;
        let pmap = ParameterMap::new(model, instructions)?;
        Experiment::new(pmap, SignalChain::new(self.chain.clone())?, self.sim_rate)
    }

    /// Emulated device built from `exp` with the hidden overrides applied.
    pub fn blackbox(&self, exp: Experiment<f64>, seed: u64) -> Result<Blackbox> {
        let excited = label_indices(exp.pmap().model().dims(), &self.blackbox.state_labels)?;
        let overrides: Vec<(Address, f64)> = self.blackbox.overrides.iter().map(|o| (o.address.clone(), o.value)).collect();
        Blackbox::new(exp, &overrides, excited, seed)
    }

    pub fn instruction_specs(exp: &Experiment<f64>) -> Vec<InstructionSpec> {
        exp.pmap().instructions().values().map(Instruction::to_spec).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    const EXAMPLE: &str = include_str!("../../../configs/single_qubit.json");

    #[test]
    fn example_config_loads() {
        let cfg = RunConfig::from_json(EXAMPLE, &[]).unwrap();
        assert_eq!(cfg.opt_map.len(), 4);
        assert_eq!(cfg.calibration.cma.popsize, Some(10));
        assert_eq!(cfg.calibration.cma.maxfevals, 300);
        assert!(cfg.calibration.cma.init_point);
        assert_eq!(cfg.model_learning.batch_sizes["orbit"], 2);
        assert_eq!(cfg.model_learning.state_labels, vec![vec![1], vec![2]]);
        cfg.experiment().unwrap();
    }

    #[test]
    fn missing_section_names_it() {
        let mut doc: Value = serde_json::from_str(EXAMPLE).unwrap();
        doc.as_object_mut().unwrap().remove("model");
        match RunConfig::from_value(doc).unwrap_err() {
            Error::Config { msg, .. } => assert!(msg.contains("model"), "{msg}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn unknown_and_mistyped_keys_are_rejected_with_paths() {
        let err = RunConfig::from_json(EXAMPLE, &["calibration.cma.popsise=3".into()]).unwrap_err();
        assert!(matches!(&err, Error::Config { path, .. } if path.starts_with("calibration.cma")), "{err}");
        let err = RunConfig::from_json(EXAMPLE, &["calibration.cma.popsize=\"many\"".into()]).unwrap_err();
        assert!(matches!(&err, Error::Config { path, .. } if path == "calibration.cma.popsize"), "{err}");
        let err = RunConfig::from_json(EXAMPLE, &["model.qubits.0.hilbert_dim=1".into()]).unwrap_err();
        assert!(matches!(&err, Error::Config { path, .. } if path == "model"), "{err}");
        assert!(RunConfig::from_json("{", &[]).is_err());
    }

    #[test]
    fn overrides() {
        let mut doc = json!({"a": {"b": 1, "list": [1, 2]}});
        apply_override(&mut doc, "a.b=2.5").unwrap();
        apply_override(&mut doc, "a.list.1=7").unwrap();
        apply_override(&mut doc, "a.name=d1").unwrap();
        apply_override(&mut doc, "x.y=true").unwrap();
        assert_eq!(doc, json!({"a": {"b": 2.5, "list": [1, 7], "name": "d1"}, "x": {"y": true}}));
        assert!(apply_override(&mut doc, "a.b.c=1").is_err());
        assert!(apply_override(&mut doc, "a.list.9=1").is_err());
        assert!(apply_override(&mut doc, "novalue").is_err());
        let cfg = RunConfig::from_json(EXAMPLE, &["optimal_control.lbfgs.maxfun=7".into(), "seed=42".into()]).unwrap();
        assert_eq!(cfg.optimal_control.lbfgs.maxfun, 7);
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn bad_override_address_is_reported() {
        let err = RunConfig::from_json(EXAMPLE, &[r#"blackbox.overrides.0.address=["Q9","freq"]"#.into()]).unwrap_err();
        assert!(matches!(&err, Error::Config { path, .. } if path == "blackbox.overrides[0].address"), "{err}");
    }
}
