//! Device model: bounded parameters, qudits, drive lines and the Hamiltonian
//!
//! `H/ħ = Σ_q [ω_q n_q − (δ_q/2)(n_q − 1) n_q] + Σ_d c_d(t) (b + b†)_d`.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::qcore::complexify;
use crate::{CMatrix, Error, Real, Result};

/// Physical unit of a [`Quantity`]. "Hz 2pi" values are stored in Hz and
/// multiplied by 2π when they enter a Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "Hz 2pi")]
    Hz2Pi,
    #[serde(rename = "Hz")]
    Hz,
    #[serde(rename = "Hz/V")]
    HzPerVolt,
    #[serde(rename = "V")]
    Volt,
    #[serde(rename = "rad")]
    Rad,
    #[serde(rename = "s")]
    Second,
    #[serde(rename = "")]
    Dimensionless,
}

impl Unit {
    /// Factor taking the stored number to SI / angular units.
    pub fn conversion(self) -> f64 {
        match self {
            Unit::Hz2Pi => std::f64::consts::TAU,
            _ => 1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Hz2Pi => "Hz 2pi",
            Unit::Hz => "Hz",
            Unit::HzPerVolt => "Hz/V",
            Unit::Volt => "V",
            Unit::Rad => "rad",
            Unit::Second => "s",
            Unit::Dimensionless => "",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A bounded physical parameter.
///
/// The optimizer sees it through the scaled coordinate
/// `s = 2 (value − min) / (max − min) − 1 ∈ [−1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuantitySpec", into = "QuantitySpec")]
pub struct Quantity {
    value: f64,
    min_val: f64,
    max_val: f64,
    unit: Unit,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuantitySpec {
    value: f64,
    min: f64,
    max: f64,
    unit: Unit,
}

impl TryFrom<QuantitySpec> for Quantity {
    type Error = Error;
    fn try_from(s: QuantitySpec) -> Result<Self> {
        Quantity::new(s.value, s.min, s.max, s.unit)
    }
}

impl From<Quantity> for QuantitySpec {
    fn from(q: Quantity) -> Self {
        QuantitySpec { value: q.value, min: q.min_val, max: q.max_val, unit: q.unit }
    }
}

impl Quantity {
    pub fn new(value: f64, min_val: f64, max_val: f64, unit: Unit) -> Result<Self> {
        if !(value.is_finite() && min_val.is_finite() && max_val.is_finite()) {
            return Err(Error::Quantity(format!("non-finite quantity {value} in [{min_val}, {max_val}]")));
        }
        if min_val >= max_val {
            return Err(Error::Quantity(format!("empty range [{min_val}, {max_val}]")));
        }
        if value < min_val || value > max_val {
            return Err(Error::Quantity(format!("value {value} outside [{min_val}, {max_val}] {unit}")));
        }
        Ok(Self { value, min_val, max_val, unit })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Value in SI / angular units (Hz 2pi → rad/s).
    pub fn si(&self) -> f64 {
        self.value * self.unit.conversion()
    }

    pub fn min_val(&self) -> f64 {
        self.min_val
    }

    pub fn max_val(&self) -> f64 {
        self.max_val
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn get_scaled(&self) -> f64 {
        2.0 * (self.value - self.min_val) / (self.max_val - self.min_val) - 1.0
    }

    /// Set from the scaled coordinate, clamping to `[−1, 1]`. Returns whether
    /// clamping happened.
    pub fn set_scaled(&mut self, s: f64) -> bool {
        let clamped = s.clamp(-1.0, 1.0);
        let v = self.min_val + (clamped + 1.0) * (self.max_val - self.min_val) / 2.0;
        self.value = v.clamp(self.min_val, self.max_val);
        clamped != s
    }

    /// Set a physical value, clamping to the bounds. Returns whether clamping
    /// happened.
    pub fn set_value_clamped(&mut self, v: f64) -> bool {
        let c = v.clamp(self.min_val, self.max_val);
        self.value = c;
        c != v
    }

    pub fn set_value(&mut self, v: f64) -> Result<()> {
        if v < self.min_val || v > self.max_val || !v.is_finite() {
            return Err(Error::Quantity(format!(
                "value {v} outside [{}, {}] {}",
                self.min_val, self.max_val, self.unit
            )));
        }
        self.value = v;
        Ok(())
    }

    /// Same bounds and unit.
    pub fn same_domain(&self, other: &Quantity) -> bool {
        self.min_val == other.min_val && self.max_val == other.max_val && self.unit == other.unit
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.value, self.unit)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Qubit {
    pub name: String,
    pub freq: Quantity,
    pub anhar: Quantity,
    pub hilbert_dim: usize,
}

impl Qubit {
    pub fn param(&self, name: &str) -> Option<&Quantity> {
        match name {
            "freq" => Some(&self.freq),
            "anhar" => Some(&self.anhar),
            _ => None,
        }
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Quantity> {
        match name {
            "freq" => Some(&mut self.freq),
            "anhar" => Some(&mut self.anhar),
            _ => None,
        }
    }
}

/// Drive line coupling `c(t)(b + b†)` into the connected qudits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drive {
    pub name: String,
    pub connected: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub qubits: Vec<Qubit>,
    pub drives: Vec<Drive>,
}

/// Qudits plus drives, with the operator matrices of the Hamiltonian cached
/// on the full (tensor-product) space.
#[derive(Clone, Debug)]
pub struct DeviceModel {
    qubits: Vec<Qubit>,
    drives: Vec<Drive>,
    dims: Vec<usize>,
    // per qubit: b†b and (b†b − 1) b†b, embedded (diagonal, real)
    number_ops: Vec<DMatrix<f64>>,
    anhar_ops: Vec<DMatrix<f64>>,
    // per drive: Σ_connected (b + b†), embedded
    control_ops: Vec<DMatrix<f64>>,
}

fn embed(op: &DMatrix<f64>, index: usize, dims: &[usize]) -> DMatrix<f64> {
    dims.iter().enumerate().fold(DMatrix::identity(1, 1), |acc, (k, &d)| {
        if k == index {
            acc.kronecker(op)
        } else {
            acc.kronecker(&DMatrix::identity(d, d))
        }
    })
}

impl DeviceModel {
    pub fn new(qubits: Vec<Qubit>, drives: Vec<Drive>) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::Empty("model qubits"));
        }
        for (i, q) in qubits.iter().enumerate() {
            if q.hilbert_dim < 2 {
                return Err(Error::InvalidDimension(q.hilbert_dim));
            }
            if qubits[..i].iter().any(|p| p.name == q.name) {
                return Err(Error::Precondition(format!("duplicate qubit name `{}`", q.name)));
            }
        }
        let dims: Vec<usize> = qubits.iter().map(|q| q.hilbert_dim).collect();
        let mut number_ops = Vec::new();
        let mut anhar_ops = Vec::new();
        let mut local_x = Vec::new();
        for (i, q) in qubits.iter().enumerate() {
            let d = q.hilbert_dim;
            let n = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |k, _| k as f64));
            let nn = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |k, _| (k as f64 - 1.0) * k as f64));
            let x = DMatrix::from_fn(d, d, |r, c| {
                if c == r + 1 {
                    (c as f64).sqrt()
                } else if r == c + 1 {
                    (r as f64).sqrt()
                } else {
                    0.0
                }
            });
            number_ops.push(embed(&n, i, &dims));
            anhar_ops.push(embed(&nn, i, &dims));
            local_x.push(embed(&x, i, &dims));
        }
        let total: usize = dims.iter().product();
        let mut control_ops = Vec::new();
        for (k, drive) in drives.iter().enumerate() {
            if drives[..k].iter().any(|d| d.name == drive.name) {
                return Err(Error::Precondition(format!("duplicate drive name `{}`", drive.name)));
            }
            if drive.connected.is_empty() {
                return Err(Error::Precondition(format!("drive `{}` is not connected", drive.name)));
            }
            let mut op = DMatrix::zeros(total, total);
            for name in &drive.connected {
                let idx = qubits
                    .iter()
                    .position(|q| &q.name == name)
                    .ok_or_else(|| Error::Unknown { kind: "qubit", name: name.clone() })?;
                op += &local_x[idx];
            }
            control_ops.push(op);
        }
        Ok(Self { qubits, drives, dims, number_ops, anhar_ops, control_ops })
    }

    pub fn from_spec(spec: ModelSpec) -> Result<Self> {
        Self::new(spec.qubits, spec.drives)
    }

    pub fn to_spec(&self) -> ModelSpec {
        ModelSpec { qubits: self.qubits.clone(), drives: self.drives.clone() }
    }

    pub fn qubits(&self) -> &[Qubit] {
        &self.qubits
    }

    pub fn drives(&self) -> &[Drive] {
        &self.drives
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn qubit_index(&self, name: &str) -> Result<usize> {
        self.qubits
            .iter()
            .position(|q| q.name == name)
            .ok_or_else(|| Error::Unknown { kind: "qubit", name: name.to_string() })
    }

    pub fn drive(&self, name: &str) -> Result<&Drive> {
        self.drives.iter().find(|d| d.name == name).ok_or_else(|| Error::Unknown { kind: "drive", name: name.to_string() })
    }

    pub fn quantity(&self, element: &str, param: &str) -> Result<&Quantity> {
        let q = &self.qubits[self.qubit_index(element)?];
        q.param(param).ok_or_else(|| Error::Unknown { kind: "qubit parameter", name: format!("{element}-{param}") })
    }

    /// Mutable access to a model parameter. Cached operators do not depend on
    /// parameter values, so no rebuild is needed.
    pub fn quantity_mut(&mut self, element: &str, param: &str) -> Result<&mut Quantity> {
        let i = self.qubit_index(element)?;
        self.qubits[i]
            .param_mut(param)
            .ok_or_else(|| Error::Unknown { kind: "qubit parameter", name: format!("{element}-{param}") })
    }

    /// Embedded number operator of qubit `index`, as a real diagonal.
    pub fn number_operator(&self, index: usize) -> &DMatrix<f64> {
        &self.number_ops[index]
    }

    /// Drift Hamiltonian in rad/s.
    pub fn drift_hamiltonian<T: Real>(&self) -> CMatrix<T> {
        let mut h = DMatrix::<f64>::zeros(self.dim(), self.dim());
        for (i, q) in self.qubits.iter().enumerate() {
            h += &self.number_ops[i] * q.freq.si();
            h -= &self.anhar_ops[i] * (q.anhar.si() / 2.0);
        }
        complexify(&h)
    }

    /// Dimensionless coupling operator of a drive; multiplied by `c(t)` in
    /// rad/s during propagation.
    pub fn control_hamiltonian<T: Real>(&self, drive: &str) -> Result<CMatrix<T>> {
        let k = self
            .drives
            .iter()
            .position(|d| d.name == drive)
            .ok_or_else(|| Error::Unknown { kind: "drive", name: drive.to_string() })?;
        Ok(complexify(&self.control_ops[k]))
    }

    /// Fock-state indices of the qubit's computational subspace (levels 0
    /// and 1 of `qubit`, every other qudit in its ground state).
    pub fn computational_subspace(&self, qubit: usize) -> Vec<usize> {
        let stride: usize = self.dims[qubit + 1..].iter().product();
        vec![0, stride]
    }
}
