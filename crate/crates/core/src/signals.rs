//! Control electronics twin.
//!
//! A channel's signal chain is a DAG of devices turning an instruction's
//! envelope parameters into the sampled field `c(t)` (rad/s) that multiplies
//! the drive operator. The canonical chain is
//! `LO, AWG → DAC(AWG) → Mixer(LO, DAC) → VoltsToHertz(Mixer)`.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::gateset::{EnvelopeSpec, Instruction};
use crate::model::{Quantity, Unit};
use crate::qcore::PropagationGrid;
use crate::{Error, Real, Result, C};

/// Default AWG sample rate (S/s).
pub const DEFAULT_AWG_RATE: f64 = 2e9;
/// Default simulation sample rate (S/s).
pub const DEFAULT_SIM_RATE: f64 = 100e9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignalUnit {
    Volt,
    /// Angular frequency, ready to multiply a Hamiltonian term.
    RadPerSecond,
}

impl fmt::Display for SignalUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignalUnit::Volt => "V",
            SignalUnit::RadPerSecond => "rad/s",
        })
    }
}

/// Uniformly sampled signal. Samples sit at the midpoints of `n` equal
/// intervals covering `[0, n·dt]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSignal<T: Real> {
    dt: f64,
    ts: Vec<f64>,
    values: Vec<C<T>>,
    unit: SignalUnit,
    iq: bool,
}

impl<T: Real> SampledSignal<T> {
    fn on_grid(grid: &PropagationGrid, values: Vec<C<T>>, unit: SignalUnit, iq: bool) -> Self {
        Self { dt: grid.dt, ts: grid.midpoints(), values, unit, iq }
    }

    /// Real signal from samples at midpoints of a `dt` grid.
    pub fn real(dt: f64, samples: &[f64], unit: SignalUnit) -> Result<Self> {
        let grid = PropagationGrid::new(dt, samples.len())?;
        Ok(Self::on_grid(&grid, samples.iter().map(|&v| C::new(T::of(v), T::zero())).collect(), unit, false))
    }

    /// Complex I + iQ signal from samples at midpoints of a `dt` grid.
    pub fn iq(dt: f64, samples: &[C<f64>], unit: SignalUnit) -> Result<Self> {
        let grid = PropagationGrid::new(dt, samples.len())?;
        Ok(Self::on_grid(&grid, samples.iter().map(|z| C::new(T::of(z.re), T::of(z.im))).collect(), unit, true))
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn values(&self) -> &[C<T>] {
        &self.values
    }

    /// Real parts (I, or the whole signal for real signals).
    pub fn re(&self) -> Vec<T> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn im(&self) -> Vec<T> {
        self.values.iter().map(|z| z.im).collect()
    }

    pub fn unit(&self) -> SignalUnit {
        self.unit
    }

    pub fn is_iq(&self) -> bool {
        self.iq
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.values.len() as f64
    }

    pub fn grid(&self) -> PropagationGrid {
        PropagationGrid { dt: self.dt, n_slices: self.values.len() }
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.values.len() == other.values.len() && ((self.dt - other.dt) / self.dt).abs() < 1e-12
    }
}

/// Gaussian pulse on `[0, t_final]`, offset so both edges are exactly zero.
/// Returns `(env(t), d env/dt)`; both vanish outside the pulse.
pub fn gaussian(t: f64, t_final: f64, sigma: f64) -> (f64, f64) {
    if t < 0.0 || t > t_final {
        return (0.0, 0.0);
    }
    let offset = (-t_final * t_final / (8.0 * sigma * sigma)).exp();
    let norm = 1.0 - offset;
    let x = t - t_final / 2.0;
    let g = (-x * x / (2.0 * sigma * sigma)).exp();
    ((g - offset) / norm, -x / (sigma * sigma) * g / norm)
}

fn envelope_values(env: &EnvelopeSpec, t: f64) -> Result<(f64, f64)> {
    match env.shape.as_str() {
        "gauss" | "gaussian" => Ok(gaussian(t, env.t_final.value(), env.sigma.value())),
        other => Err(Error::Unknown { kind: "envelope shape", name: other.to_string() }),
    }
}

/// AWG output (complex I + iQ, volts) for one envelope.
///
/// `z(t) = amp · [env(t) + i·delta·env'(t) / (2π·drag_scale)] · exp(i(xy_angle − 2π f_off t))`
///
/// so that after mixing with an LO at `f_lo` the qubit sees a drive at
/// `f_lo + f_off` whose rotating-frame axis is set by `xy_angle`
/// (0 → +x, π/2 → +y) and whose quadrature carries the DRAG correction.
/// `drag_scale` is in "Hz 2pi".
pub fn awg_generate<T: Real>(env: &EnvelopeSpec, rate: f64, drag_scale: f64, duration: f64) -> Result<SampledSignal<T>> {
    let t_env = env.t_final.value();
    if !(t_env > 0.0) || !(duration > 0.0) {
        return Err(Error::Precondition(format!("pulse duration must be positive, got {t_env} s")));
    }
    if !(drag_scale > 0.0) {
        return Err(Error::Precondition(format!("DRAG scale must be positive, got {drag_scale}")));
    }
    let grid = PropagationGrid::from_rate(duration, rate)?;
    let amp = env.amp.value();
    let drag = env.delta.value() / (TAU * drag_scale);
    let f_off = env.freq_offset.si();
    let xy = env.xy_angle.value();
    let mut values = Vec::with_capacity(grid.n_slices);
    for t in grid.midpoints() {
        let (e, de) = envelope_values(env, t)?;
        let shaped = C::new(amp * e, amp * drag * de);
        let phase = xy - f_off * t;
        let z = shaped * C::new(phase.cos(), phase.sin());
        values.push(C::new(T::of(z.re), T::of(z.im)));
    }
    Ok(SampledSignal::on_grid(&grid, values, SignalUnit::Volt, true))
}

/// Linear interpolation onto a finer grid of the same duration; values
/// before the first / after the last sample are held.
pub fn dac_resample<T: Real>(sig: &SampledSignal<T>, sim_rate: f64) -> Result<SampledSignal<T>> {
    let in_rate = 1.0 / sig.dt;
    if sim_rate < in_rate * (1.0 - 1e-9) {
        return Err(Error::Precondition(format!(
            "simulation rate {sim_rate:e} S/s below input rate {in_rate:e} S/s"
        )));
    }
    if sig.is_empty() {
        return Err(Error::Empty("signal"));
    }
    let grid = PropagationGrid::from_rate(sig.duration(), sim_rate)?;
    if grid.n_slices == sig.len() {
        return Ok(sig.clone());
    }
    let n = sig.len();
    let values = grid
        .midpoints()
        .into_iter()
        .map(|t| {
            let pos = t / sig.dt - 0.5;
            if pos <= 0.0 {
                sig.values[0]
            } else if pos >= (n - 1) as f64 {
                sig.values[n - 1]
            } else {
                let i = pos.floor() as usize;
                let w = T::of(pos - i as f64);
                sig.values[i] * (T::one() - w) + sig.values[i + 1] * w
            }
        })
        .collect();
    Ok(SampledSignal::on_grid(&grid, values, sig.unit, sig.iq))
}

/// Phase-coherent local oscillator `exp(i ω t)` on the given grid.
pub fn lo_signal<T: Real>(freq_hz: f64, grid: &PropagationGrid) -> SampledSignal<T> {
    let w = TAU * freq_hz;
    let values = grid
        .midpoints()
        .into_iter()
        .map(|t| {
            let p = w * t;
            C::new(T::of(p.cos()), T::of(p.sin()))
        })
        .collect();
    SampledSignal::on_grid(grid, values, SignalUnit::Volt, true)
}

/// IQ mixing: `out(t) = I(t) cos(ω_lo t) + Q(t) sin(ω_lo t)`.
pub fn mixer_mix<T: Real>(lo: &SampledSignal<T>, env: &SampledSignal<T>) -> Result<SampledSignal<T>> {
    if !lo.same_grid(env) {
        return Err(Error::Shape(format!(
            "mixer inputs on different grids ({} samples @ {:e} s vs {} @ {:e} s)",
            lo.len(),
            lo.dt,
            env.len(),
            env.dt
        )));
    }
    for s in [lo, env] {
        if s.unit != SignalUnit::Volt {
            return Err(Error::Unit { expected: "V".into(), got: s.unit.to_string() });
        }
    }
    let values = lo
        .values
        .iter()
        .zip(&env.values)
        .map(|(l, z)| C::new(z.re * l.re + z.im * l.im, T::zero()))
        .collect();
    Ok(SampledSignal { dt: env.dt, ts: env.ts.clone(), values, unit: SignalUnit::Volt, iq: false })
}

/// `c(t) = 2π · factor · u(t)` with `factor` in Hz/V.
pub fn volts_to_hertz<T: Real>(sig: &SampledSignal<T>, factor: &Quantity) -> Result<SampledSignal<T>> {
    if sig.unit != SignalUnit::Volt {
        return Err(Error::Unit { expected: "V".into(), got: sig.unit.to_string() });
    }
    if factor.unit() != Unit::HzPerVolt {
        return Err(Error::Unit { expected: "Hz/V".into(), got: factor.unit().to_string() });
    }
    let k = T::of(TAU * factor.value());
    let values = sig.values.iter().map(|z| z * k).collect();
    Ok(SampledSignal { dt: sig.dt, ts: sig.ts.clone(), values, unit: SignalUnit::RadPerSecond, iq: sig.iq })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DeviceKind {
    #[serde(rename = "LO")]
    Lo,
    #[serde(rename = "AWG")]
    Awg,
    #[serde(rename = "DigitalToAnalog")]
    DigitalToAnalog,
    #[serde(rename = "Mixer")]
    Mixer,
    #[serde(rename = "VoltsToHertz")]
    VoltsToHertz,
}

impl DeviceKind {
    pub fn arity(self) -> usize {
        match self {
            DeviceKind::Lo | DeviceKind::Awg => 0,
            DeviceKind::DigitalToAnalog | DeviceKind::VoltsToHertz => 1,
            DeviceKind::Mixer => 2,
        }
    }

    fn required_params(self) -> &'static [(&'static str, Unit)] {
        match self {
            DeviceKind::Awg => &[("rate", Unit::Hz)],
            DeviceKind::VoltsToHertz => &[("V_to_Hz", Unit::HzPerVolt)],
            _ => &[],
        }
    }
}

/// One device of the electronics stack.
///
/// * `LO`: no parameters; oscillates at the instruction's carrier frequency.
/// * `AWG`: `rate` (Hz), optional `drag_scale` ("Hz 2pi", default 210 MHz).
/// * `DigitalToAnalog`: resamples to the simulation rate.
/// * `Mixer`: inputs `[LO, signal]`.
/// * `VoltsToHertz`: `V_to_Hz` (Hz/V).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalDevice {
    pub kind: DeviceKind,
    #[serde(default)]
    pub params: BTreeMap<String, Quantity>,
}

impl SignalDevice {
    pub fn new(kind: DeviceKind) -> Self {
        Self { kind, params: BTreeMap::new() }
    }

    pub fn with_param(mut self, name: &str, q: Quantity) -> Self {
        self.params.insert(name.to_string(), q);
        self
    }
}

pub const DEFAULT_DRAG_SCALE: f64 = 210e6;

/// Serialized form: `{devices: {name: {kind, params}}, chains: {channel: {device: [inputs]}}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub devices: BTreeMap<String, SignalDevice>,
    pub chains: BTreeMap<String, BTreeMap<String, Vec<String>>>,
}

#[derive(Clone, Debug)]
struct ChannelPlan {
    /// (device, inputs) in evaluation order
    order: Vec<(String, Vec<String>)>,
    terminal: String,
}

/// Validated signal chains, one per drive channel.
#[derive(Clone, Debug)]
pub struct SignalChain {
    spec: ChainSpec,
    plans: BTreeMap<String, ChannelPlan>,
}

fn chain_err(device: &str, msg: impl Into<String>) -> Error {
    Error::Chain { device: device.to_string(), msg: msg.into() }
}

impl SignalChain {
    pub fn new(spec: ChainSpec) -> Result<Self> {
        for (name, dev) in &spec.devices {
            for (p, unit) in dev.kind.required_params() {
                match dev.params.get(*p) {
                    None => return Err(chain_err(name, format!("missing parameter `{p}`"))),
                    Some(q) if q.unit() != *unit => {
                        return Err(chain_err(name, format!("parameter `{p}` must be in {unit}, got {}", q.unit())))
                    }
                    _ => {}
                }
            }
            if let Some(q) = dev.params.get("drag_scale") {
                if q.unit() != Unit::Hz2Pi || !(q.value() > 0.0) {
                    return Err(chain_err(name, "`drag_scale` must be a positive \"Hz 2pi\" quantity"));
                }
            }
        }
        let mut plans = BTreeMap::new();
        for (channel, wiring) in &spec.chains {
            plans.insert(channel.clone(), Self::plan(&spec.devices, wiring)?);
        }
        Ok(Self { spec, plans })
    }

    fn plan(devices: &BTreeMap<String, SignalDevice>, wiring: &BTreeMap<String, Vec<String>>) -> Result<ChannelPlan> {
        for (name, inputs) in wiring {
            let dev = devices.get(name).ok_or_else(|| chain_err(name, "not defined in `devices`"))?;
            if inputs.len() != dev.kind.arity() {
                return Err(chain_err(
                    name,
                    format!("{:?} takes {} input(s), wired with {}", dev.kind, dev.kind.arity(), inputs.len()),
                ));
            }
            for i in inputs {
                if !wiring.contains_key(i) {
                    return Err(chain_err(name, format!("input `{i}` is not part of this chain")));
                }
            }
            if dev.kind == DeviceKind::Mixer {
                let lo_first = devices.get(&inputs[0]).map(|d| d.kind) == Some(DeviceKind::Lo);
                let lo_second = devices.get(&inputs[1]).map(|d| d.kind) == Some(DeviceKind::Lo);
                if lo_first == lo_second {
                    return Err(chain_err(name, "mixer needs exactly one LO input"));
                }
            }
        }
        // Kahn's algorithm; BTreeSet keeps the order deterministic
        let mut pending: BTreeMap<&str, usize> = wiring.iter().map(|(n, i)| (n.as_str(), i.len())).collect();
        let mut ready: BTreeSet<&str> = pending.iter().filter(|(_, &k)| k == 0).map(|(&n, _)| n).collect();
        let mut order = Vec::new();
        while let Some(n) = ready.pop_first() {
            pending.remove(n);
            order.push((n.to_string(), wiring[n].clone()));
            for (m, inputs) in wiring {
                if let Some(k) = pending.get_mut(m.as_str()) {
                    let hits = inputs.iter().filter(|i| i.as_str() == n).count();
                    if hits > 0 {
                        *k -= hits;
                        if *k == 0 {
                            ready.insert(m.as_str());
                        }
                    }
                }
            }
        }
        if let Some((n, _)) = pending.iter().next() {
            return Err(chain_err(n, "signal chain contains a cycle"));
        }
        let consumed: BTreeSet<&str> = wiring.values().flatten().map(String::as_str).collect();
        let terminals: Vec<&str> = wiring.keys().map(String::as_str).filter(|n| !consumed.contains(n)).collect();
        let [terminal] = terminals.as_slice() else {
            return Err(chain_err(
                terminals.first().copied().unwrap_or("<chain>"),
                format!("chain needs exactly one terminal device, found {terminals:?}"),
            ));
        };
        if devices[*terminal].kind != DeviceKind::VoltsToHertz {
            return Err(chain_err(terminal, "terminal device must output Hz 2pi (VoltsToHertz)"));
        }
        Ok(ChannelPlan { order, terminal: terminal.to_string() })
    }

    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }

    pub fn channels(&self) -> impl Iterator<Item = &str> {
        self.plans.keys().map(String::as_str)
    }

    /// Evaluate one channel for an instruction, returning `c(t)` in rad/s on
    /// the simulation grid covering the instruction.
    pub fn execute_channel<T: Real>(&self, channel: &str, instr: &Instruction, sim_rate: f64) -> Result<SampledSignal<T>> {
        let plan = self.plans.get(channel).ok_or_else(|| Error::Unknown { kind: "channel", name: channel.to_string() })?;
        let pulse = instr.channels.get(channel).ok_or_else(|| Error::Unknown {
            kind: "channel of instruction",
            name: format!("{}/{channel}", instr.name),
        })?;
        let sim_grid = PropagationGrid::from_rate(instr.t_final, sim_rate)?;
        let mut outputs: BTreeMap<&str, SampledSignal<T>> = BTreeMap::new();
        for (name, inputs) in &plan.order {
            let dev = &self.spec.devices[name];
            let input = |k: usize| -> &SampledSignal<T> { &outputs[inputs[k].as_str()] };
            let out = match dev.kind {
                DeviceKind::Lo => lo_signal(pulse.carrier.freq.value(), &sim_grid),
                DeviceKind::Awg => {
                    let rate = dev.params["rate"].value();
                    let drag_scale = dev.params.get("drag_scale").map_or(DEFAULT_DRAG_SCALE, Quantity::value);
                    awg_generate(&pulse.envelope, rate, drag_scale, instr.t_final).map_err(|e| chain_err(name, e.to_string()))?
                }
                DeviceKind::DigitalToAnalog => dac_resample(input(0), sim_rate).map_err(|e| chain_err(name, e.to_string()))?,
                DeviceKind::Mixer => {
                    let (lo, sig) = if self.spec.devices[&inputs[0]].kind == DeviceKind::Lo {
                        (input(0), input(1))
                    } else {
                        (input(1), input(0))
                    };
                    mixer_mix(lo, sig).map_err(|e| chain_err(name, e.to_string()))?
                }
                DeviceKind::VoltsToHertz => {
                    volts_to_hertz(input(0), &dev.params["V_to_Hz"]).map_err(|e| chain_err(name, e.to_string()))?
                }
            };
            outputs.insert(name.as_str(), out);
        }
        let field = outputs.remove(plan.terminal.as_str()).expect("terminal evaluated");
        if field.unit != SignalUnit::RadPerSecond || field.iq {
            return Err(chain_err(&plan.terminal, "chain output is not a real Hz 2pi field"));
        }
        if field.len() != sim_grid.n_slices {
            return Err(chain_err(&plan.terminal, "chain output is not on the simulation grid"));
        }
        Ok(field)
    }

    /// Evaluate every channel the instruction drives.
    pub fn execute<T: Real>(&self, instr: &Instruction, sim_rate: f64) -> Result<BTreeMap<String, SampledSignal<T>>> {
        instr
            .channels
            .keys()
            .map(|ch| Ok((ch.clone(), self.execute_channel(ch, instr, sim_rate)?)))
            .collect()
    }
}

/// The LO / AWG / DAC / Mixer / VoltsToHertz chain for one channel.
pub fn standard_chain(channel: &str, awg_rate: f64, v_to_hz: f64) -> Result<SignalChain> {
    let q = |v: f64, unit| Quantity::new(v, v * 0.5, v * 2.0, unit);
    let mut devices = BTreeMap::new();
    devices.insert("LO".to_string(), SignalDevice::new(DeviceKind::Lo));
    devices.insert("AWG".to_string(), SignalDevice::new(DeviceKind::Awg).with_param("rate", q(awg_rate, Unit::Hz)?));
    devices.insert("DigitalToAnalog".to_string(), SignalDevice::new(DeviceKind::DigitalToAnalog));
    devices.insert("Mixer".to_string(), SignalDevice::new(DeviceKind::Mixer));
    devices.insert(
        "VoltsToHertz".to_string(),
        SignalDevice::new(DeviceKind::VoltsToHertz).with_param("V_to_Hz", q(v_to_hz, Unit::HzPerVolt)?),
    );
    let wiring: BTreeMap<String, Vec<String>> = [
        ("LO", vec![]),
        ("AWG", vec![]),
        ("DigitalToAnalog", vec!["AWG"]),
        ("Mixer", vec!["LO", "DigitalToAnalog"]),
        ("VoltsToHertz", vec!["Mixer"]),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.into_iter().map(String::from).collect()))
    .collect();
    SignalChain::new(ChainSpec { devices, chains: BTreeMap::from([(channel.to_string(), wiring)]) })
}
