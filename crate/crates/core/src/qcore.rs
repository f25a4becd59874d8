//! Complex linear algebra kernels: Fock-space operators, Hermitian matrix
//! exponentials, piecewise-constant propagation and gate fidelities.
//!
//! All Hamiltonians are in angular-frequency units (rad/s); a slice of
//! duration `dt` evolves with `exp(-i h dt)`.

use std::collections::BTreeMap;

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::{CMatrix, Error, Real, Result, C};

/// Numerical tolerances used by the kernel checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative Frobenius bound on `‖H − H†‖ / max(1, ‖H‖)`.
    pub hermiticity: f64,
    /// Frobenius bound on `‖U†U − I‖`.
    pub unitarity: f64,
}

pub const DEFAULT_TOLERANCES: Tolerances = Tolerances { hermiticity: 1e-10, unitarity: 1e-9 };

impl Default for Tolerances {
    fn default() -> Self {
        DEFAULT_TOLERANCES
    }
}

/// Slice count above which the per-slice exponentials are computed on the
/// rayon pool.
const PAR_SLICE_THRESHOLD: usize = 128;

/// Uniform time grid of a piecewise-constant propagation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropagationGrid {
    pub dt: f64,
    pub n_slices: usize,
}

impl PropagationGrid {
    pub fn new(dt: f64, n_slices: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Precondition(format!("time step must be positive, got {dt}")));
        }
        if n_slices == 0 {
            return Err(Error::Empty("propagation grid"));
        }
        Ok(Self { dt, n_slices })
    }

    /// Grid covering `t_final` at `rate` samples per second.
    pub fn from_rate(t_final: f64, rate: f64) -> Result<Self> {
        if !(t_final > 0.0) || !(rate > 0.0) {
            return Err(Error::Precondition(format!(
                "grid needs positive duration and rate, got {t_final} s at {rate} S/s"
            )));
        }
        let n = (t_final * rate).round().max(1.0) as usize;
        Self::new(t_final / n as f64, n)
    }

    pub fn t_final(&self) -> f64 {
        self.dt * self.n_slices as f64
    }

    /// Slice midpoints, where the piecewise-constant Hamiltonian is sampled.
    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.n_slices).map(|j| (j as f64 + 0.5) * self.dt).collect()
    }
}

/// Annihilation operator `b` truncated to `dim` Fock levels.
pub fn ladder<T: Real>(dim: usize) -> Result<CMatrix<T>> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let mut b = CMatrix::<T>::zeros(dim, dim);
    for n in 1..dim {
        b[(n - 1, n)] = C::new(T::of(n as f64).sqrt(), T::zero());
    }
    Ok(b)
}

/// Number operator `b†b = diag(0, 1, …, dim-1)`.
pub fn number<T: Real>(dim: usize) -> Result<CMatrix<T>> {
    if dim < 2 {
        return Err(Error::InvalidDimension(dim));
    }
    let diag = DVector::from_fn(dim, |n, _| C::new(T::of(n as f64), T::zero()));
    Ok(CMatrix::from_diagonal(&diag))
}

/// Promote a real matrix to a complex one.
pub fn complexify<T: Real>(m: &DMatrix<f64>) -> CMatrix<T> {
    m.map(|x| C::new(T::of(x), T::zero()))
}

/// Kronecker product `a ⊗ b`.
pub fn kron<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kronecker(b)
}

/// Diagonal unitary `exp(i·Σ_k phases[k]·|k⟩⟨k|)`.
pub fn diagonal_phase<T: Real>(phases: &[f64]) -> CMatrix<T> {
    let diag = DVector::from_iterator(
        phases.len(),
        phases.iter().map(|&p| C::new(T::of(p.cos()), T::of(p.sin()))),
    );
    CMatrix::from_diagonal(&diag)
}

pub fn frobenius_norm<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// `‖H − H†‖_F / max(1, ‖H‖_F)`.
pub fn hermiticity_error<T: Real>(h: &CMatrix<T>) -> f64 {
    let scale = frobenius_norm(h).f64().max(1.0);
    frobenius_norm(&(h - h.adjoint())).f64() / scale
}

/// `‖U†U − I‖_F`.
pub fn unitarity_error<T: Real>(u: &CMatrix<T>) -> f64 {
    let n = u.nrows();
    frobenius_norm(&(u.adjoint() * u - CMatrix::<T>::identity(n, n))).f64()
}

fn check_square<T: Real>(m: &CMatrix<T>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Shape(format!("{what} must be square, got {}×{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite(format!("{what} has non-finite entries")));
    }
    Ok(())
}

fn check_hermitian<T: Real>(h: &CMatrix<T>, tol: &Tolerances) -> Result<()> {
    check_square(h, "generator")?;
    let err = hermiticity_error(h);
    if err > tol.hermiticity {
        return Err(Error::Precondition(format!(
            "generator is not Hermitian (relative error {err:.3e} > {:.1e})",
            tol.hermiticity
        )));
    }
    Ok(())
}

/// `exp(-i h dt)` by Hermitian eigendecomposition, without input checks.
pub(crate) fn expm_unchecked<T: Real>(h: &CMatrix<T>, dt: T) -> CMatrix<T> {
    let scaled = h * C::new(dt, T::zero());
    let eig = SymmetricEigen::new(scaled);
    let v = eig.eigenvectors;
    let phases = eig.eigenvalues.map(|l| C::new(l.cos(), -l.sin()));
    let mut vd = v.clone();
    for (j, mut col) in vd.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    vd * v.adjoint()
}

/// Unitary `exp(-i h dt)` of a Hermitian generator `h` (rad/s).
pub fn expm_hermitian_generator<T: Real>(h: &CMatrix<T>, dt: T) -> Result<CMatrix<T>> {
    expm_hermitian_generator_with(h, dt, &DEFAULT_TOLERANCES)
}

pub fn expm_hermitian_generator_with<T: Real>(
    h: &CMatrix<T>,
    dt: T,
    tol: &Tolerances,
) -> Result<CMatrix<T>> {
    check_hermitian(h, tol)?;
    Ok(expm_unchecked(h, dt))
}

/// Pairwise product of time-ordered factors (earliest first).
///
/// Each level multiplies neighbours as `later · earlier`; an odd trailing
/// factor is carried up to the next level unchanged.
pub fn tree_product<T: Real>(mut factors: Vec<CMatrix<T>>) -> Result<CMatrix<T>> {
    if factors.is_empty() {
        return Err(Error::Empty("propagator factors"));
    }
    while factors.len() > 1 {
        let mut next = Vec::with_capacity(factors.len().div_ceil(2));
        let mut it = factors.into_iter();
        while let Some(early) = it.next() {
            match it.next() {
                Some(late) => next.push(late * early),
                None => next.push(early),
            }
        }
        factors = next;
    }
    Ok(factors.pop().expect("non-empty"))
}

/// Slice exponentials `exp(-i H_j dt)` for every slice.
pub fn slice_propagators<T: Real>(h_slices: &[CMatrix<T>], dt: T) -> Result<Vec<CMatrix<T>>> {
    slice_propagators_with(h_slices, dt, &DEFAULT_TOLERANCES)
}

pub fn slice_propagators_with<T: Real>(
    h_slices: &[CMatrix<T>],
    dt: T,
    tol: &Tolerances,
) -> Result<Vec<CMatrix<T>>> {
    if h_slices.is_empty() {
        return Err(Error::Empty("Hamiltonian slices"));
    }
    let dim = h_slices[0].nrows();
    for h in h_slices {
        if h.nrows() != dim || h.ncols() != dim {
            return Err(Error::Shape(format!("slice of shape {}×{} in a dim-{dim} batch", h.nrows(), h.ncols())));
        }
        check_hermitian(h, tol)?;
    }
    Ok(if h_slices.len() >= PAR_SLICE_THRESHOLD {
        h_slices.par_iter().map(|h| expm_unchecked(h, dt)).collect()
    } else {
        h_slices.iter().map(|h| expm_unchecked(h, dt)).collect()
    })
}

/// Propagator `U = dU_n ··· dU_1` of piecewise-constant Hamiltonian slices,
/// earliest slice first, reduced as a binary tree.
pub fn propagate<T: Real>(h_slices: &[CMatrix<T>], dt: T) -> Result<CMatrix<T>> {
    tree_product(slice_propagators(h_slices, dt)?)
}

/// Restrict `m` to the rows and columns listed in `subspace`.
pub fn project<T: Real>(m: &CMatrix<T>, subspace: &[usize]) -> Result<CMatrix<T>> {
    let dim = m.nrows();
    if let Some(&index) = subspace.iter().find(|&&i| i >= dim) {
        return Err(Error::OutOfRange { index, dim });
    }
    Ok(CMatrix::from_fn(subspace.len(), subspace.len(), |r, c| m[(subspace[r], subspace[c])]))
}

/// Gate overlap `|Tr(P u† P u_ideal) / d_s|²` on the listed subspace.
///
/// `u_ideal` may be given either on the subspace (`d_s × d_s`) or on the
/// full space, in which case it is projected as well.
pub fn unitary_fidelity<T: Real>(u: &CMatrix<T>, u_ideal: &CMatrix<T>, subspace: &[usize]) -> Result<f64> {
    if subspace.is_empty() {
        return Err(Error::Empty("fidelity subspace"));
    }
    check_square(u, "propagator")?;
    check_square(u_ideal, "ideal gate")?;
    let ds = subspace.len();
    let u_sub = project(u, subspace)?;
    let ideal_sub = if u_ideal.nrows() == ds {
        u_ideal.clone()
    } else if u_ideal.nrows() == u.nrows() {
        project(u_ideal, subspace)?
    } else {
        return Err(Error::Shape(format!(
            "ideal gate is {}×{}, expected {ds}×{ds} or full {}×{}",
            u_ideal.nrows(),
            u_ideal.ncols(),
            u.nrows(),
            u.nrows()
        )));
    };
    let tr = (u_sub.adjoint() * ideal_sub).trace();
    let f = tr.norm_sqr().f64() / (ds * ds) as f64;
    Ok(f.clamp(0.0, 1.0))
}

/// `1 − mean_g F(U_g, ideal_g)` over a gate-set.
pub fn avg_gateset_infidelity<T: Real>(
    us: &BTreeMap<String, CMatrix<T>>,
    ideals: &BTreeMap<String, CMatrix<T>>,
    subspace: &[usize],
) -> Result<f64> {
    if us.is_empty() {
        return Err(Error::Empty("gate-set"));
    }
    if us.len() != ideals.len() || us.keys().any(|k| !ideals.contains_key(k)) {
        let missing: Vec<_> = us.keys().filter(|k| !ideals.contains_key(*k)).chain(ideals.keys().filter(|k| !us.contains_key(*k))).cloned().collect();
        return Err(Error::Shape(format!("gate key sets differ: {missing:?}")));
    }
    let mut total = 0.0;
    for (name, u) in us {
        total += unitary_fidelity(u, &ideals[name], subspace)?;
    }
    Ok(1.0 - total / us.len() as f64)
}
