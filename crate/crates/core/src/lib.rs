//! Pulse-level digital twin of a superconducting qudit.
//!
//! The crate covers the whole control/calibration/characterization loop:
//!
//! * [`qcore`]: complex linear algebra kernels (ladder operators, Hermitian
//!   matrix exponentials, piecewise-constant propagation, gate fidelities).
//! * [`model`]: bounded physical parameters and the qudit Hamiltonian.
//! * [`signals`]: the control-electronics chain (AWG, DAC, mixer, V→Hz).
//! * [`gateset`]: instructions, ideal gates and the [`gateset::ParameterMap`].
//! * [`experiment`]: gate propagators, sequence simulation, shot-noise
//!   measurement and the emulated [`experiment::Blackbox`].
//! * [`optim`]: CMA-ES, L-BFGS, finite-difference gradients and the hybrid
//!   CMA-ES → L-BFGS driver.
//! * [`workflows`]: optimal control, ORBIT calibration and model learning.
//! * [`config`] / [`pipeline`]: run configuration and the file-producing
//!   stage runners used by the command-line front-end.
//!
//! The numerical kernels are generic over the real scalar type through the
//! [`Real`] trait; `f64` is the working precision everywhere else and the
//! aliases below name the common concrete types.

// Positivity checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod gateset;
pub mod model;
pub mod optim;
pub mod pipeline;
pub mod qcore;
mod scalar;
pub mod signals;
pub mod workflows;

pub use error::{Error, Result};
pub use scalar::Real;

/// Complex scalar over a real type `T`.
pub type C<T> = nalgebra::Complex<T>;

/// Dense complex matrix, the carrier of every operator and propagator.
pub type CMatrix<T> = nalgebra::DMatrix<nalgebra::Complex<T>>;

/// Dense complex column vector (state vectors).
pub type CVector<T> = nalgebra::DVector<nalgebra::Complex<T>>;

pub type C64 = C<f64>;
pub type C32 = C<f32>;
pub type CMatrix64 = CMatrix<f64>;
pub type CMatrix32 = CMatrix<f32>;
pub type CVector64 = CVector<f64>;

pub type Experiment64 = experiment::Experiment<f64>;
pub type Experiment32 = experiment::Experiment<f32>;
pub type Cmaes64 = optim::Cmaes<f64>;
pub type OptResult64 = optim::OptResult<f64>;
