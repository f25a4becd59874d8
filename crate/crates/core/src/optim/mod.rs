//! Optimizers over scaled parameter vectors: CMA-ES behind an ask-tell
//! interface, L-BFGS with a strong-Wolfe line search, finite-difference
//! gradients and the CMA-ES → L-BFGS hybrid.

mod cmaes;
mod hybrid;
mod lbfgs;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

pub use cmaes::{minimize_cmaes, minimize_cmaes_batch, Cmaes, CmaesOptions, TolFunMode};
pub use hybrid::cma_pre_lbfgs;
pub use lbfgs::{lbfgs_fd, lbfgs_minimize, LbfgsOptions};

/// Population optimizers: `ask` proposes a batch, `tell` takes one value
/// per proposed candidate, in proposal order.
pub trait AskTell<T: Real> {
    fn dim(&self) -> usize;
    fn ask(&mut self) -> Result<Vec<Vec<T>>>;
    /// Returns the termination reason once a stopping rule fires.
    fn tell(&mut self, fvals: &[f64]) -> Result<Option<Termination>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxFevals,
    TolFun,
    Ftarget,
    StopAtSigma,
    StopAtConvergence,
    GradientNorm,
    FunctionChange,
    LineSearch,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().expect("string"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cmaes,
    Lbfgs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub x_scaled: Vec<f64>,
    pub f: f64,
}

/// One optimizer iteration. `best_f` is the best value seen so far in the
/// whole run; `fevals` is cumulative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub phase: Phase,
    pub fevals: usize,
    pub candidates: Vec<Candidate>,
    pub best_f: f64,
    pub sigma: Option<f64>,
}

impl IterRecord {
    /// Lowest candidate value of this iteration.
    pub fn iteration_best(&self) -> f64 {
        self.candidates.iter().map(|c| c.f).fold(f64::INFINITY, f64::min)
    }
}

/// Outcome of an optimization. `best_f` equals the minimum over all
/// recorded candidates; `n_evals` counts objective-value evaluations,
/// including finite-difference stencil points.
#[derive(Clone, Debug, PartialEq)]
pub struct OptResult<T: Real = f64> {
    pub best_x: Vec<T>,
    pub best_f: f64,
    pub n_evals: usize,
    pub history: Vec<IterRecord>,
    pub termination: Termination,
}

impl<T: Real> OptResult<T> {
    /// Write the history as JSON lines.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for rec in &self.history {
            serde_json::to_writer(&mut w, rec)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn to_f64<T: Real>(x: &[T]) -> Vec<f64> {
    x.iter().map(|v| v.f64()).collect()
}

fn check_finite(what: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("{what} is {v}")))
    }
}

/// Central-difference gradient with step `eps` per coordinate.
pub fn fd_gradient<T: Real, F>(f: &mut F, x: &[T], eps: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[T]) -> Result<f64>,
{
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("finite-difference step must be positive, got {eps}")));
    }
    let mut xp = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let xi = x[i];
        xp[i] = T::of(xi.f64() + eps);
        let fp = check_finite("objective at x + eps·e_i", f(&xp)?)?;
        xp[i] = T::of(xi.f64() - eps);
        let fm = check_finite("objective at x − eps·e_i", f(&xp)?)?;
        xp[i] = xi;
        g.push((fp - fm) / (2.0 * eps));
    }
    Ok(g)
}
