//! Gate propagators, sequence simulation and emulated measurement.
//!
//! Gates are simulated in the lab frame on the signal chain's sampled field
//! and then moved into the drive's rotating frame by the virtual-Z
//! correction `exp(+i ω_d T b†b)`, where `ω_d` is the effective carrier
//! (LO frequency plus the envelope's frequency offset). The envelope's
//! `framechange` adds a further `exp(+i φ b†b)`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gateset::{Instruction, OptMap, ParameterMap};
use crate::qcore::{diagonal_phase, propagate, unitary_fidelity, PropagationGrid};
use crate::signals::SignalChain;
use crate::{CMatrix, CVector, Error, Real, Result, C};

/// Model + electronics + gate-set, with a propagator cache that is dropped
/// whenever parameters change.
#[derive(Clone, Debug)]
pub struct Experiment<T: Real = f64> {
    pmap: ParameterMap,
    chain: SignalChain,
    sim_rate: f64,
    cache: Option<BTreeMap<String, CMatrix<T>>>,
    propagations: usize,
}

/// Populations of every basis state after a sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationResult {
    pub pops: Vec<f64>,
    pub labels: Vec<String>,
}

impl PopulationResult {
    /// Total population in the listed basis states.
    pub fn population_of(&self, states: &[usize]) -> f64 {
        states.iter().filter_map(|&i| self.pops.get(i)).sum()
    }
}

/// One measured sequence: sampled excited population, its standard error
/// and the shot count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub result: f64,
    pub std: f64,
    pub shots: usize,
}

impl<T: Real> Experiment<T> {
    pub fn new(pmap: ParameterMap, chain: SignalChain, sim_rate: f64) -> Result<Self> {
        if !(sim_rate > 0.0) {
            return Err(Error::Precondition(format!("simulation rate must be positive, got {sim_rate}")));
        }
        for instr in pmap.instructions().values() {
            for ch in instr.channels.keys() {
                if !chain.channels().any(|c| c == ch) {
                    return Err(Error::Unknown { kind: "signal chain for channel", name: ch.clone() });
                }
            }
        }
        Ok(Self { pmap, chain, sim_rate, cache: None, propagations: 0 })
    }

    pub fn pmap(&self) -> &ParameterMap {
        &self.pmap
    }

    /// Mutable access to the parameters; invalidates the propagator cache.
    pub fn pmap_mut(&mut self) -> &mut ParameterMap {
        self.cache = None;
        &mut self.pmap
    }

    pub fn chain(&self) -> &SignalChain {
        &self.chain
    }

    pub fn sim_rate(&self) -> f64 {
        self.sim_rate
    }

    /// Number of gate propagations performed so far (cache misses × gates).
    pub fn propagation_count(&self) -> usize {
        self.propagations
    }

    pub fn dim(&self) -> usize {
        self.pmap.model().dim()
    }

    /// Scaled parameter vector of the current opt_map.
    pub fn get_parameters(&self) -> Result<Vec<f64>> {
        self.pmap.get_vector()
    }

    pub fn set_parameters(&mut self, v: &[f64]) -> Result<crate::gateset::ClampReport> {
        self.pmap_mut().set_vector(v)
    }

    pub fn set_opt_map(&mut self, opt_map: OptMap) -> Result<()> {
        self.pmap.set_opt_map(opt_map)
    }

    /// Computational subspace of the gate's target qubit.
    pub fn subspace(&self, qubit: usize) -> Vec<usize> {
        self.pmap.model().computational_subspace(qubit)
    }

    /// Ground state `|0…0⟩`.
    pub fn ground_state(&self) -> CVector<T> {
        let mut psi = CVector::<T>::zeros(self.dim());
        psi[0] = C::new(T::one(), T::zero());
        psi
    }

    /// Lab-frame simulation of one instruction followed by the virtual-Z and
    /// framechange corrections.
    pub fn gate_propagator(&self, instr: &Instruction) -> Result<CMatrix<T>> {
        self.gate_propagator_inner(instr).map_err(|e| Error::Instruction { name: instr.name.clone(), source: Box::new(e) })
    }

    fn gate_propagator_inner(&self, instr: &Instruction) -> Result<CMatrix<T>> {
        let model = self.pmap.model();
        let grid = PropagationGrid::from_rate(instr.t_final, self.sim_rate)?;
        let fields = self.chain.execute::<T>(instr, self.sim_rate)?;
        let h0 = model.drift_hamiltonian::<T>();
        let controls: Vec<(CMatrix<T>, Vec<T>)> = fields
            .iter()
            .map(|(ch, sig)| Ok((model.control_hamiltonian::<T>(ch)?, sig.re())))
            .collect::<Result<_>>()?;
        let slices: Vec<CMatrix<T>> = (0..grid.n_slices)
            .map(|j| {
                let mut h = h0.clone();
                for (hc, c) in &controls {
                    h += hc * C::new(c[j], T::zero());
                }
                h
            })
            .collect();
        let u = propagate(&slices, T::of(grid.dt))?;

        let t = grid.t_final();
        let mut phases = vec![0.0; model.dim()];
        for (ch, pulse) in &instr.channels {
            let omega_d = TAU * (pulse.carrier.freq.value() + pulse.envelope.freq_offset.value());
            let angle = omega_d * t + pulse.envelope.framechange.value();
            for q in &model.drive(ch)?.connected {
                let n = model.number_operator(model.qubit_index(q)?);
                for (k, p) in phases.iter_mut().enumerate() {
                    *p += angle * n[(k, k)];
                }
            }
        }
        Ok(diagonal_phase::<T>(&phases) * u)
    }

    /// Propagators of every instruction, computed once per parameter setting.
    pub fn compute_propagators(&mut self) -> Result<&BTreeMap<String, CMatrix<T>>> {
        if self.cache.is_none() {
            let instrs: Vec<&Instruction> = self.pmap.instructions().values().collect();
            let us: Vec<CMatrix<T>> = instrs.par_iter().map(|i| self.gate_propagator(i)).collect::<Result<_>>()?;
            self.propagations += us.len();
            self.cache = Some(instrs.iter().map(|i| i.name.clone()).zip(us).collect());
        }
        Ok(self.cache.as_ref().expect("filled above"))
    }

    /// Ideal gates of the instruction set, keyed like the propagators.
    pub fn ideal_gates(&self) -> BTreeMap<String, CMatrix<T>> {
        self.pmap
            .instructions()
            .iter()
            .map(|(k, i)| (k.clone(), i.ideal.map(|z| C::new(T::of(z.re), T::of(z.im)))))
            .collect()
    }

    /// `1 − mean F` of the gate-set on each gate's computational subspace.
    pub fn gateset_infidelity(&mut self) -> Result<f64> {
        let ideals = self.ideal_gates();
        let targets: BTreeMap<String, usize> =
            self.pmap.instructions().iter().map(|(k, i)| (k.clone(), i.target)).collect();
        let model = self.pmap.model().clone();
        let us = self.compute_propagators()?;
        let mut total = 0.0;
        for (name, u) in us {
            total += unitary_fidelity(u, &ideals[name], &model.computational_subspace(targets[name]))?;
        }
        Ok(1.0 - total / us.len() as f64)
    }

    /// Apply `seq` (first gate first) to `psi0` and return populations.
    pub fn simulate_sequence(&mut self, seq: &[String], psi0: &CVector<T>) -> Result<PopulationResult> {
        let dim = self.dim();
        if psi0.len() != dim {
            return Err(Error::Shape(format!("initial state has {} entries, model dimension is {dim}", psi0.len())));
        }
        let labels = basis_labels(self.pmap.model().dims());
        let us = self.compute_propagators()?;
        let mut psi = psi0.clone();
        for g in seq {
            let u = us.get(g).ok_or_else(|| Error::Unknown { kind: "gate", name: g.clone() })?;
            psi = u * psi;
        }
        let pops = psi.iter().map(|z| z.norm_sqr().f64()).collect();
        Ok(PopulationResult { pops, labels })
    }

    /// Sequences from the ground state.
    pub fn simulate_sequences(&mut self, seqs: &[Vec<String>]) -> Result<Vec<PopulationResult>> {
        let psi0 = self.ground_state();
        self.compute_propagators()?;
        seqs.iter().map(|s| self.simulate_sequence(s, &psi0)).collect()
    }
}

fn basis_labels(dims: &[usize]) -> Vec<String> {
    let total: usize = dims.iter().product();
    (0..total)
        .map(|mut k| {
            let mut digits = vec![0; dims.len()];
            for (i, d) in dims.iter().enumerate().rev() {
                digits[i] = k % d;
                k /= d;
            }
            if digits.len() == 1 {
                digits[0].to_string()
            } else {
                format!("({})", digits.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","))
            }
        })
        .collect()
}

/// Multinomial shot sample of `pops`; returns the sampled population of the
/// `excited` states and `sqrt(p̂(1 − p̂)/shots)` floored at `1/(2·shots)`.
pub fn measure_with_shots<R: rand::Rng>(pops: &PopulationResult, excited: &[usize], shots: usize, rng: &mut R) -> Result<Measurement> {
    if shots < 1 {
        return Err(Error::Precondition("need at least one shot".into()));
    }
    if let Some(&index) = excited.iter().find(|&&i| i >= pops.pops.len()) {
        return Err(Error::OutOfRange { index, dim: pops.pops.len() });
    }
    let counts = multinomial(&pops.pops, shots as u64, rng);
    let hits: u64 = excited.iter().map(|&i| counts[i]).sum();
    let p = hits as f64 / shots as f64;
    let std = (p * (1.0 - p) / shots as f64).sqrt().max(1.0 / (2.0 * shots as f64));
    Ok(Measurement { result: p, std, shots })
}

/// Sequential conditional-binomial multinomial draw.
fn multinomial<R: rand::Rng>(probs: &[f64], n: u64, rng: &mut R) -> Vec<u64> {
    let total: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    let mut left = n;
    let mut mass = total;
    let mut out = Vec::with_capacity(probs.len());
    for (i, &p) in probs.iter().enumerate() {
        let p = p.max(0.0);
        let k = if left == 0 || mass <= 0.0 {
            0
        } else if i + 1 == probs.len() {
            left
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(left, q).expect("probability clamped to [0, 1]").sample(rng)
        };
        out.push(k);
        left -= k;
        mass -= p;
    }
    out
}

/// Anything that can execute gate sequences at given pulse parameters and
/// report per-sequence measurements.
pub trait SequenceRunner {
    /// `params` are physical values, one per opt_map group.
    fn run_sequences(&mut self, params: &[f64], opt_map: &OptMap, seqs: &[Vec<String>], shots: usize) -> Result<Vec<Measurement>>;
}

/// Emulated device: an experiment with hidden parameters and shot noise.
/// Optimizers only see it through [`SequenceRunner::run_sequences`].
pub struct Blackbox {
    exp: Experiment<f64>,
    rng: ChaCha8Rng,
    excited: Vec<usize>,
}

impl Blackbox {
    /// Wrap `exp`, overriding model/pulse quantities by physical value.
    pub fn new(mut exp: Experiment<f64>, overrides: &[(crate::gateset::Address, f64)], excited: Vec<usize>, seed: u64) -> Result<Self> {
        for (addr, v) in overrides {
            exp.pmap_mut().quantity_mut(addr)?.set_value(*v)?;
        }
        if excited.iter().any(|&i| i >= exp.dim()) || excited.is_empty() {
            return Err(Error::Precondition(format!("excited states {excited:?} invalid for dimension {}", exp.dim())));
        }
        Ok(Self { exp, rng: ChaCha8Rng::seed_from_u64(seed), excited })
    }

    /// The hidden model, for scoring a finished calibration.
    pub fn experiment(&self) -> &Experiment<f64> {
        &self.exp
    }
}

impl std::fmt::Debug for Blackbox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Blackbox { .. }")
    }
}

impl SequenceRunner for Blackbox {
    fn run_sequences(&mut self, params: &[f64], opt_map: &OptMap, seqs: &[Vec<String>], shots: usize) -> Result<Vec<Measurement>> {
        self.exp.pmap_mut().set_values_at(opt_map, params)?;
        let pops = self.exp.simulate_sequences(seqs)?;
        pops.iter().map(|p| measure_with_shots(p, &self.excited, shots, &mut self.rng)).collect()
    }
}

/// Noise-free runner on a simulation model (the infinite-shot limit):
/// results are exact excited populations with zero spread.
pub struct ExactRunner<'a> {
    pub exp: &'a mut Experiment<f64>,
    pub excited: Vec<usize>,
}

impl SequenceRunner for ExactRunner<'_> {
    fn run_sequences(&mut self, params: &[f64], opt_map: &OptMap, seqs: &[Vec<String>], shots: usize) -> Result<Vec<Measurement>> {
        self.exp.pmap_mut().set_values_at(opt_map, params)?;
        let pops = self.exp.simulate_sequences(seqs)?;
        Ok(pops.iter().map(|p| Measurement { result: p.population_of(&self.excited), std: 0.0, shots }).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pops(p: &[f64]) -> PopulationResult {
        PopulationResult { pops: p.to_vec(), labels: (0..p.len()).map(|i| i.to_string()).collect() }
    }

    #[test]
    fn ground_state_measures_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for shots in [1, 10, 1000] {
            let m = measure_with_shots(&pops(&[1.0, 0.0, 0.0]), &[1, 2], shots, &mut rng).unwrap();
            assert_eq!(m.result, 0.0);
            assert_eq!(m.std, 1.0 / (2.0 * shots as f64));
        }
    }

    #[test]
    fn binomial_std_matches_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = measure_with_shots(&pops(&[0.858, 0.142, 0.0]), &[1, 2], 1000, &mut rng).unwrap();
        let expected = (m.result * (1.0 - m.result) / 1000.0).sqrt();
        assert_relative_eq!(m.std, expected, epsilon = 1e-15);
        assert!((m.std - 0.0110).abs() < 0.002, "{}", m.std);
    }

    #[test]
    fn seeded_measurement_is_reproducible() {
        let p = pops(&[0.6, 0.3, 0.1]);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5).map(|_| measure_with_shots(&p, &[1, 2], 100, &mut rng).unwrap().result).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert!(measure_with_shots(&p, &[1], 0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        assert!(measure_with_shots(&p, &[5], 10, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn multinomial_conserves_shots() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let c = multinomial(&[0.2, 0.5, 0.3], 997, &mut rng);
            assert_eq!(c.iter().sum::<u64>(), 997);
        }
    }

    #[test]
    fn labels() {
        assert_eq!(basis_labels(&[3]), vec!["0", "1", "2"]);
        assert_eq!(basis_labels(&[2, 2])[1], "(0,1)");
    }
}
