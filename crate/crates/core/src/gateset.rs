//! Instructions (envelope + carrier per drive channel), ideal target gates
//! and the [`ParameterMap`] exposing grouped parameters as one scaled vector.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{DeviceModel, Quantity, Unit};
use crate::{CMatrix, Error, Real, Result, C};

/// The gate-set `{X(π/2), Y(π/2), X(−π/2), Y(−π/2)}`, in generator order.
pub const GATE_NAMES: [&str; 4] = ["rx90p", "ry90p", "rx90m", "ry90m"];

/// Pulse envelope parameters for one drive channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    pub shape: String,
    pub amp: Quantity,
    pub t_final: Quantity,
    pub sigma: Quantity,
    pub delta: Quantity,
    pub freq_offset: Quantity,
    pub xy_angle: Quantity,
    pub framechange: Quantity,
}

impl EnvelopeSpec {
    pub fn param(&self, name: &str) -> Option<&Quantity> {
        Some(match name {
            "amp" => &self.amp,
            "t_final" => &self.t_final,
            "sigma" => &self.sigma,
            "delta" => &self.delta,
            "freq_offset" => &self.freq_offset,
            "xy_angle" => &self.xy_angle,
            "framechange" => &self.framechange,
            _ => return None,
        })
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Quantity> {
        Some(match name {
            "amp" => &mut self.amp,
            "t_final" => &mut self.t_final,
            "sigma" => &mut self.sigma,
            "delta" => &mut self.delta,
            "freq_offset" => &mut self.freq_offset,
            "xy_angle" => &mut self.xy_angle,
            "framechange" => &mut self.framechange,
            _ => return None,
        })
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_final.value() > 0.0) || !(self.sigma.value() > 0.0) {
            return Err(Error::Precondition("envelope needs t_final > 0 and sigma > 0".into()));
        }
        if self.amp.unit() != Unit::Volt
            || self.t_final.unit() != Unit::Second
            || self.sigma.unit() != Unit::Second
            || self.freq_offset.unit() != Unit::Hz2Pi
            || self.xy_angle.unit() != Unit::Rad
            || self.framechange.unit() != Unit::Rad
        {
            return Err(Error::Precondition(
                "envelope units must be amp: V, t_final/sigma: s, freq_offset: Hz 2pi, angles: rad".into(),
            ));
        }
        Ok(())
    }
}

/// Gaussian DRAG envelope with the starting values used before optimal
/// control: amp 0.5 V, delta −1, freq_offset −50 MHz, framechange 0, and
/// `sigma = t_final / 6`.
pub fn default_envelope(t_final: f64, xy_angle: f64) -> EnvelopeSpec {
    let q = |v, lo, hi, u| Quantity::new(v, lo, hi, u).expect("default envelope bounds");
    EnvelopeSpec {
        shape: "gauss".into(),
        amp: q(0.5, 0.2, 0.6, Unit::Volt),
        t_final: q(t_final, t_final / 2.0, t_final * 2.0, Unit::Second),
        sigma: q(t_final / 6.0, t_final / 12.0, t_final / 3.0, Unit::Second),
        delta: q(-1.0, -3.0, 1.0, Unit::Dimensionless),
        freq_offset: q(-50e6, -60e6, -40e6, Unit::Hz2Pi),
        xy_angle: q(xy_angle, -PI, 2.0 * PI, Unit::Rad),
        framechange: q(0.0, -PI, PI, Unit::Rad),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Carrier {
    pub freq: Quantity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelPulse {
    pub envelope: EnvelopeSpec,
    pub carrier: Carrier,
}

/// Serialized instruction; the ideal gate is derived from the name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstructionSpec {
    pub name: String,
    pub t_final: f64,
    pub channels: BTreeMap<String, ChannelPulse>,
}

/// One gate: pulses on its drive channels plus the ideal 2×2 target.
#[derive(Clone, Debug, PartialEq)]
pub struct Instruction {
    pub name: String,
    pub t_final: f64,
    pub channels: BTreeMap<String, ChannelPulse>,
    pub ideal: CMatrix<f64>,
    pub target: usize,
}

impl Instruction {
    pub fn new(name: &str, t_final: f64, channels: BTreeMap<String, ChannelPulse>) -> Result<Self> {
        let (_, target) = split_gate_name(name)?;
        let ideal = ideal_gate(name)?;
        if !(t_final > 0.0) {
            return Err(Error::Precondition(format!("instruction `{name}` needs t_final > 0")));
        }
        for pulse in channels.values() {
            pulse.envelope.validate().map_err(|e| Error::Instruction { name: name.into(), source: Box::new(e) })?;
            if pulse.envelope.t_final.value() > t_final * (1.0 + 1e-12) {
                return Err(Error::Precondition(format!("envelope of `{name}` is longer than the instruction")));
            }
        }
        Ok(Self { name: name.to_string(), t_final, channels, ideal, target })
    }

    pub fn from_spec(spec: InstructionSpec) -> Result<Self> {
        Self::new(&spec.name, spec.t_final, spec.channels)
    }

    pub fn to_spec(&self) -> InstructionSpec {
        InstructionSpec { name: self.name.clone(), t_final: self.t_final, channels: self.channels.clone() }
    }

    fn quantity(&self, channel: &str, component: &str, param: &str) -> Option<&Quantity> {
        let pulse = self.channels.get(channel)?;
        match component {
            "carrier" => (param == "freq").then_some(&pulse.carrier.freq),
            c if c == pulse.envelope.shape => pulse.envelope.param(param),
            _ => None,
        }
    }

    fn quantity_mut(&mut self, channel: &str, component: &str, param: &str) -> Option<&mut Quantity> {
        let pulse = self.channels.get_mut(channel)?;
        match component {
            "carrier" => (param == "freq").then_some(&mut pulse.carrier.freq),
            c if c == pulse.envelope.shape => pulse.envelope.param_mut(param),
            _ => None,
        }
    }
}

/// Split `"rx90p[0]"` into `("rx90p", 0)`; a bare name targets qubit 0.
pub fn split_gate_name(name: &str) -> Result<(&str, usize)> {
    let unknown = || Error::Unknown { kind: "gate", name: name.to_string() };
    let (base, target) = match name.split_once('[') {
        Some((base, rest)) => {
            let idx = rest.strip_suffix(']').ok_or_else(unknown)?;
            (base, idx.parse().map_err(|_| unknown())?)
        }
        None => (name, 0),
    };
    if !GATE_NAMES.contains(&base) {
        return Err(unknown());
    }
    Ok((base, target))
}

/// Ideal 2×2 target `exp(∓i(π/4)σ_{x|y})`.
pub fn ideal_gate<T: Real>(name: &str) -> Result<CMatrix<T>> {
    let (base, _) = split_gate_name(name)?;
    let (axis_angle, sign) = match base {
        "rx90p" => (0.0, 1.0),
        "ry90p" => (FRAC_PI_2, 1.0),
        "rx90m" => (0.0, -1.0),
        "ry90m" => (FRAC_PI_2, -1.0),
        _ => unreachable!("validated by split_gate_name"),
    };
    Ok(rotation(axis_angle, sign * FRAC_PI_2))
}

/// Rotation by `angle` about the equatorial axis at azimuth `phi`:
/// `exp(−i (angle/2) (cos φ σx + sin φ σy))`.
pub fn rotation<T: Real>(phi: f64, angle: f64) -> CMatrix<T> {
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let z = |re: f64, im: f64| C::new(T::of(re), T::of(im));
    // −i s (cos φ σx + sin φ σy) off-diagonals: [0, −i s e^{−iφ}; −i s e^{iφ}, 0]
    CMatrix::from_row_slice(
        2,
        2,
        &[z(c, 0.0), z(-s * phi.sin(), -s * phi.cos()), z(s * phi.sin(), -s * phi.cos()), z(c, 0.0)],
    )
}

/// Drive-phase `xy_angle` realizing each entry of [`GATE_NAMES`].
pub const GATE_XY_ANGLES: [f64; 4] = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];

/// The four single-qubit gates on `target`, driven through `channel`, each
/// a copy of `template` with its `xy_angle` set per [`GATE_XY_ANGLES`].
pub fn single_qubit_gateset(channel: &str, target: usize, t_final: f64, carrier: &Carrier, template: &EnvelopeSpec) -> Result<Vec<Instruction>> {
    GATE_NAMES
        .iter()
        .zip(GATE_XY_ANGLES)
        .map(|(g, xy)| {
            let mut envelope = template.clone();
            envelope.xy_angle.set_value(xy)?;
            let pulse = ChannelPulse { envelope, carrier: carrier.clone() };
            Instruction::new(&format!("{g}[{target}]"), t_final, BTreeMap::from([(channel.to_string(), pulse)]))
        })
        .collect()
}

/// Address of one optimizable quantity.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub enum Address {
    /// `(instruction, channel, component, parameter)`, e.g.
    /// `("rx90p[0]", "d1", "gauss", "amp")`.
    Pulse { instruction: String, channel: String, component: String, param: String },
    /// `(element, parameter)`, e.g. `("Q1", "freq")`.
    Model { element: String, param: String },
}

impl Address {
    pub fn pulse(instruction: &str, channel: &str, component: &str, param: &str) -> Self {
        Address::Pulse {
            instruction: instruction.into(),
            channel: channel.into(),
            component: component.into(),
            param: param.into(),
        }
    }

    pub fn model(element: &str, param: &str) -> Self {
        Address::Model { element: element.into(), param: param.into() }
    }
}

impl TryFrom<Vec<String>> for Address {
    type Error = String;
    fn try_from(parts: Vec<String>) -> Result<Self, String> {
        match parts.as_slice() {
            [i, c, comp, p] => Ok(Address::pulse(i, c, comp, p)),
            [e, p] => Ok(Address::model(e, p)),
            _ => Err(format!("parameter address needs 4 (pulse) or 2 (model) parts, got {parts:?}")),
        }
    }
}

impl From<Address> for Vec<String> {
    fn from(a: Address) -> Self {
        match a {
            Address::Pulse { instruction, channel, component, param } => vec![instruction, channel, component, param],
            Address::Model { element, param } => vec![element, param],
        }
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Address::Pulse { instruction, channel, component, param } => {
                write!(f, "{instruction}-{channel}-{component}-{param}")
            }
            Address::Model { element, param } => write!(f, "{element}-{param}"),
        }
    }
}

/// Groups of addresses sharing one optimizer coordinate.
pub type OptMap = Vec<Vec<Address>>;

/// Gate-set map: amp, delta, freq_offset and framechange, each group
/// shared by all four gates.
pub fn gateset_opt_map(channel: &str, target: usize) -> OptMap {
    ["amp", "delta", "freq_offset", "framechange"]
        .iter()
        .map(|p| GATE_NAMES.iter().map(|g| Address::pulse(&format!("{g}[{target}]"), channel, "gauss", p)).collect())
        .collect()
}

/// Which coordinates were clamped by [`ParameterMap::set_vector`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClampReport {
    pub clamped: Vec<usize>,
}

impl ClampReport {
    pub fn any(&self) -> bool {
        !self.clamped.is_empty()
    }
}

/// Device model plus gate-set registry with an optimization map on top.
#[derive(Clone, Debug)]
pub struct ParameterMap {
    model: DeviceModel,
    instructions: BTreeMap<String, Instruction>,
    opt_map: OptMap,
}

impl ParameterMap {
    pub fn new(model: DeviceModel, instructions: Vec<Instruction>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for instr in instructions {
            for ch in instr.channels.keys() {
                model.drive(ch)?;
            }
            let name = instr.name.clone();
            if map.insert(name.clone(), instr).is_some() {
                return Err(Error::Precondition(format!("duplicate instruction `{name}`")));
            }
        }
        Ok(Self { model, instructions: map, opt_map: Vec::new() })
    }

    pub fn model(&self) -> &DeviceModel {
        &self.model
    }

    pub fn instructions(&self) -> &BTreeMap<String, Instruction> {
        &self.instructions
    }

    pub fn instruction(&self, name: &str) -> Result<&Instruction> {
        self.instructions.get(name).ok_or_else(|| Error::Unknown { kind: "instruction", name: name.into() })
    }

    pub fn opt_map(&self) -> &OptMap {
        &self.opt_map
    }

    /// Install an optimization map after checking every address resolves and
    /// each group shares bounds and unit.
    pub fn set_opt_map(&mut self, opt_map: OptMap) -> Result<()> {
        for group in &opt_map {
            let first = group.first().ok_or(Error::Empty("opt_map group"))?;
            let q0 = self.quantity(first)?;
            for addr in &group[1..] {
                if !self.quantity(addr)?.same_domain(q0) {
                    return Err(Error::Precondition(format!(
                        "`{addr}` does not share bounds/unit with `{first}` in its group"
                    )));
                }
            }
        }
        self.opt_map = opt_map;
        Ok(())
    }

    pub fn quantity(&self, addr: &Address) -> Result<&Quantity> {
        match addr {
            Address::Pulse { instruction, channel, component, param } => self
                .instruction(instruction)?
                .quantity(channel, component, param)
                .ok_or_else(|| Error::Unknown { kind: "parameter", name: addr.to_string() }),
            Address::Model { element, param } => self.model.quantity(element, param),
        }
    }

    pub fn quantity_mut(&mut self, addr: &Address) -> Result<&mut Quantity> {
        match addr {
            Address::Pulse { instruction, channel, component, param } => self
                .instructions
                .get_mut(instruction)
                .ok_or_else(|| Error::Unknown { kind: "instruction", name: instruction.clone() })?
                .quantity_mut(channel, component, param)
                .ok_or_else(|| Error::Unknown { kind: "parameter", name: addr.to_string() }),
            Address::Model { element, param } => self.model.quantity_mut(element, param),
        }
    }

    pub fn n_params(&self) -> usize {
        self.opt_map.len()
    }

    /// One scaled coordinate per group, read from its first address.
    pub fn get_vector(&self) -> Result<Vec<f64>> {
        self.opt_map.iter().map(|g| Ok(self.quantity(&g[0])?.get_scaled())).collect()
    }

    /// Write scaled coordinates to every address of each group.
    pub fn set_vector(&mut self, v: &[f64]) -> Result<ClampReport> {
        if v.len() != self.opt_map.len() {
            return Err(Error::Shape(format!("parameter vector has {} entries, opt_map has {} groups", v.len(), self.opt_map.len())));
        }
        let mut report = ClampReport::default();
        let opt_map = std::mem::take(&mut self.opt_map);
        let mut result = Ok(());
        'groups: for (i, (group, &s)) in opt_map.iter().zip(v).enumerate() {
            for addr in group {
                match self.quantity_mut(addr) {
                    Ok(q) => {
                        if q.set_scaled(s) && !report.clamped.contains(&i) {
                            report.clamped.push(i);
                        }
                    }
                    Err(e) => {
                        result = Err(e);
                        break 'groups;
                    }
                }
            }
        }
        self.opt_map = opt_map;
        result.map(|_| report)
    }

    /// Physical values, one per group.
    pub fn get_values(&self) -> Result<Vec<Quantity>> {
        self.opt_map.iter().map(|g| self.quantity(&g[0]).cloned()).collect()
    }

    /// Write physical values (clamped to bounds) to every address of each group.
    pub fn set_values(&mut self, values: &[f64]) -> Result<ClampReport> {
        let opt_map = std::mem::take(&mut self.opt_map);
        let result = self.set_values_at(&opt_map, values);
        self.opt_map = opt_map;
        result
    }

    /// Like [`Self::set_values`] for an arbitrary map, leaving the installed
    /// opt_map untouched.
    pub fn set_values_at(&mut self, opt_map: &OptMap, values: &[f64]) -> Result<ClampReport> {
        if values.len() != opt_map.len() {
            return Err(Error::Shape(format!("{} values for {} groups", values.len(), opt_map.len())));
        }
        let mut report = ClampReport::default();
        for (i, group) in opt_map.iter().enumerate() {
            for addr in group {
                if self.quantity_mut(addr)?.set_value_clamped(values[i]) && !report.clamped.contains(&i) {
                    report.clamped.push(i);
                }
            }
        }
        Ok(report)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::{Drive, Qubit};
    use crate::qcore::{frobenius_norm, unitary_fidelity};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    fn rz(theta: f64) -> CMatrix<f64> {
        CMatrix::from_row_slice(2, 2, &[c((theta / 2.0).cos(), -(theta / 2.0).sin()), c(0., 0.), c(0., 0.), c((theta / 2.0).cos(), (theta / 2.0).sin())])
    }

    pub(crate) fn pmap() -> ParameterMap {
        let q = Qubit {
            name: "Q1".into(),
            freq: Quantity::new(5e9, 4.995e9, 5.005e9, Unit::Hz2Pi).unwrap(),
            anhar: Quantity::new(-210e6, -380e6, -120e6, Unit::Hz2Pi).unwrap(),
            hilbert_dim: 3,
        };
        let model = DeviceModel::new(vec![q], vec![Drive { name: "d1".into(), connected: vec!["Q1".into()] }]).unwrap();
        let carrier = Carrier { freq: Quantity::new(5.05e9, 4.5e9, 5.5e9, Unit::Hz2Pi).unwrap() };
        let instrs = single_qubit_gateset("d1", 0, 7e-9, &carrier, &default_envelope(7e-9, 0.0)).unwrap();
        ParameterMap::new(model, instrs).unwrap()
    }

    #[test]
    fn ideal_rx90p_closed_form() {
        let u = ideal_gate::<f64>("rx90p[0]").unwrap();
        let s = FRAC_1_SQRT_2;
        let expected = CMatrix::from_row_slice(2, 2, &[c(s, 0.), c(0., -s), c(0., -s), c(s, 0.)]);
        assert!(frobenius_norm(&(u - expected)) < 1e-15);
    }

    #[test]
    fn ideal_inverse_pairs_and_full_turn() {
        let id = CMatrix::<f64>::identity(2, 2);
        for (p, m) in [("rx90p", "rx90m"), ("ry90p", "ry90m")] {
            let prod = ideal_gate::<f64>(p).unwrap() * ideal_gate::<f64>(m).unwrap();
            assert!(frobenius_norm(&(prod - &id)) < 1e-15);
        }
        let x = ideal_gate::<f64>("rx90p").unwrap();
        let x4 = &x * &x * &x * &x;
        assert!(frobenius_norm(&(&x4 + &id)) < 1e-14);
        assert_relative_eq!(unitary_fidelity(&x4, &id, &[0, 1]).unwrap(), 1.0, epsilon = 1e-14);
        assert!(matches!(ideal_gate::<f64>("rz90p"), Err(Error::Unknown { .. })));
        assert!(ideal_gate::<f64>("rx90p[x]").is_err());
    }

    #[test]
    fn y_axis_is_z_conjugated_x_axis() {
        let x = ideal_gate::<f64>("rx90p").unwrap();
        let y = ideal_gate::<f64>("ry90p").unwrap();
        let conj = rz(FRAC_PI_2) * x * rz(-FRAC_PI_2);
        assert_relative_eq!(unitary_fidelity(&conj, &y, &[0, 1]).unwrap(), 1.0, epsilon = 1e-14);
        let xm = ideal_gate::<f64>("rx90m").unwrap();
        let ym = ideal_gate::<f64>("ry90m").unwrap();
        let conj = rz(FRAC_PI_2) * xm * rz(-FRAC_PI_2);
        assert_relative_eq!(unitary_fidelity(&conj, &ym, &[0, 1]).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn gate_name_parsing() {
        assert_eq!(split_gate_name("ry90m[3]").unwrap(), ("ry90m", 3));
        assert_eq!(split_gate_name("rx90p").unwrap(), ("rx90p", 0));
        assert!(split_gate_name("rx90p[0").is_err());
    }

    #[test]
    fn four_groups_sixteen_addresses() {
        let mut pm = pmap();
        let om = gateset_opt_map("d1", 0);
        assert_eq!(om.iter().map(Vec::len).sum::<usize>(), 16);
        pm.set_opt_map(om).unwrap();
        let v = pm.get_vector().unwrap();
        assert_eq!(v.len(), 4);
        // amp 0.5 in [0.2, 0.6] -> 0.5; delta −1 in [−3, 1] -> 0
        assert_relative_eq!(v[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(v[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(v[2], 0.0, epsilon = 1e-12);
        assert_relative_eq!(v[3], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn set_vector_shares_values_and_clamps() {
        let mut pm = pmap();
        pm.set_opt_map(gateset_opt_map("d1", 0)).unwrap();
        let report = pm.set_vector(&[0.3, -0.2, 1.5, 0.1]).unwrap();
        assert_eq!(report.clamped, vec![2]);
        let amps: Vec<f64> = GATE_NAMES
            .iter()
            .map(|g| pm.quantity(&Address::pulse(&format!("{g}[0]"), "d1", "gauss", "amp")).unwrap().value())
            .collect();
        assert!(amps.iter().all(|a| *a == amps[0]));
        let v = pm.get_vector().unwrap();
        assert_eq!(v[2], 1.0);
        assert!(pm.set_vector(&[0.0; 3]).is_err());
    }

    #[test]
    fn vector_round_trip() {
        let mut pm = pmap();
        pm.set_opt_map(gateset_opt_map("d1", 0)).unwrap();
        let v = [0.123, -0.77, 0.5, -0.01];
        pm.set_vector(&v).unwrap();
        for (a, b) in pm.get_vector().unwrap().iter().zip(v) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn empty_opt_map_is_noop() {
        let mut pm = pmap();
        assert!(pm.get_vector().unwrap().is_empty());
        assert!(!pm.set_vector(&[]).unwrap().any());
    }

    #[test]
    fn bad_addresses_rejected() {
        let mut pm = pmap();
        let bad = vec![vec![Address::pulse("rx90p[0]", "d1", "gauss", "nope")]];
        assert!(matches!(pm.set_opt_map(bad), Err(Error::Unknown { .. })));
        let mixed = vec![vec![Address::pulse("rx90p[0]", "d1", "gauss", "amp"), Address::pulse("rx90p[0]", "d1", "gauss", "delta")]];
        assert!(matches!(pm.set_opt_map(mixed), Err(Error::Precondition(_))));
        pm.set_opt_map(vec![vec![Address::model("Q1", "freq")]]).unwrap();
        pm.set_vector(&[0.2]).unwrap();
        assert_relative_eq!(pm.model().quantity("Q1", "freq").unwrap().value(), 5.001e9, max_relative = 1e-12);
    }

    #[test]
    fn address_json_forms() {
        let om: OptMap = serde_json::from_str(r#"[[["rx90p[0]", "d1", "gauss", "amp"]], [["Q1", "freq"]]]"#).unwrap();
        assert_eq!(om[0][0], Address::pulse("rx90p[0]", "d1", "gauss", "amp"));
        assert_eq!(om[1][0], Address::model("Q1", "freq"));
        assert!(serde_json::from_str::<OptMap>(r#"[[["a", "b", "c"]]]"#).is_err());
        assert_eq!(om[1][0].to_string(), "Q1-freq");
    }
}
