use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{check_finite, fd_gradient, to_f64, Candidate, IterRecord, OptResult, Phase, Termination};
use crate::{Error, Real, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LbfgsOptions {
    /// Budget of value-and-gradient evaluations.
    #[serde(default = "default_maxfun")]
    pub maxfun: usize,
    #[serde(default = "default_memory")]
    pub memory: usize,
    #[serde(default = "default_gtol")]
    pub gtol: f64,
    /// Relative decrease below which an accepted step ends the run.
    #[serde(default = "default_ftol")]
    pub ftol: f64,
    #[serde(default = "default_c1")]
    pub c1: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
    /// Central-difference step, used when gradients are numerical.
    #[serde(default = "default_fd_eps")]
    pub fd_eps: f64,
}

fn default_maxfun() -> usize {
    150
}
fn default_memory() -> usize {
    10
}
fn default_gtol() -> f64 {
    1e-8
}
fn default_ftol() -> f64 {
    2.2e-9
}
fn default_c1() -> f64 {
    1e-4
}
fn default_c2() -> f64 {
    0.9
}
fn default_fd_eps() -> f64 {
    1e-6
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            maxfun: default_maxfun(),
            memory: default_memory(),
            gtol: default_gtol(),
            ftol: default_ftol(),
            c1: default_c1(),
            c2: default_c2(),
            fd_eps: default_fd_eps(),
        }
    }
}

impl LbfgsOptions {
    pub fn validate(&self) -> Result<()> {
        if self.maxfun == 0 || self.memory == 0 {
            return Err(Error::Precondition("maxfun and memory must be positive".into()));
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::Precondition(format!("need 0 < c1 < c2 < 1, got c1={} c2={}", self.c1, self.c2)));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(x: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + a * di).collect()
}

enum Search {
    Accepted(f64, Vec<f64>, Vec<f64>),
    Budget,
    Failed,
}

struct Driver<'a, T: Real, FG> {
    fg: FG,
    opts: &'a LbfgsOptions,
    cost: usize,
    calls: usize,
    best: Option<(Vec<f64>, f64)>,
    candidates: Vec<Candidate>,
    _t: std::marker::PhantomData<T>,
}

impl<T: Real, FG: FnMut(&[T]) -> Result<(f64, Vec<f64>)>> Driver<'_, T, FG> {
    fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let xt: Vec<T> = x.iter().map(|&v| T::of(v)).collect();
        let (f, g) = (self.fg)(&xt)?;
        self.calls += 1;
        check_finite("objective value", f)?;
        if g.len() != x.len() {
            return Err(Error::Shape(format!("gradient has {} entries for {} parameters", g.len(), x.len())));
        }
        for &gi in &g {
            check_finite("gradient entry", gi)?;
        }
        let xs = to_f64(&xt);
        if self.best.as_ref().is_none_or(|b| f < b.1) {
            self.best = Some((xs.clone(), f));
        }
        self.candidates.push(Candidate { x_scaled: xs, f });
        Ok((f, g))
    }

    fn exhausted(&self) -> bool {
        self.calls >= self.opts.maxfun
    }

    /// Strong-Wolfe bracketing search along `d`.
    fn line_search(&mut self, x: &[f64], f0: f64, g0: &[f64], d: &[f64], alpha0: f64) -> Result<Search> {
        let (c1, c2) = (self.opts.c1, self.opts.c2);
        let dphi0 = dot(g0, d);
        let (mut a_prev, mut f_prev, mut dphi_prev) = (0.0, f0, dphi0);
        let mut a = alpha0;
        for i in 0..30 {
            if self.exhausted() {
                return Ok(Search::Budget);
            }
            let xa = axpy(x, a, d);
            let (fa, ga) = self.eval(&xa)?;
            let dphi = dot(&ga, d);
            if fa > f0 + c1 * a * dphi0 || (i > 0 && fa >= f_prev) {
                return self.zoom(x, f0, dphi0, d, (a_prev, f_prev, dphi_prev), (a, fa));
            }
            if dphi.abs() <= -c2 * dphi0 {
                return Ok(Search::Accepted(fa, xa, ga));
            }
            if dphi >= 0.0 {
                return self.zoom(x, f0, dphi0, d, (a, fa, dphi), (a_prev, f_prev));
            }
            (a_prev, f_prev, dphi_prev) = (a, fa, dphi);
            a *= 2.0;
        }
        Ok(Search::Failed)
    }

    fn zoom(&mut self, x: &[f64], f0: f64, dphi0: f64, d: &[f64], lo: (f64, f64, f64), hi: (f64, f64)) -> Result<Search> {
        let (c1, c2) = (self.opts.c1, self.opts.c2);
        let (mut a_lo, mut f_lo, mut dphi_lo) = lo;
        let (mut a_hi, mut f_hi) = hi;
        for _ in 0..30 {
            if self.exhausted() {
                return Ok(Search::Budget);
            }
            let w = a_hi - a_lo;
            let denom = 2.0 * (f_hi - f_lo - dphi_lo * w);
            let mut a = if denom.abs() > 0.0 { a_lo - dphi_lo * w * w / denom } else { a_lo + 0.5 * w };
            let (lo_b, hi_b) = (a_lo.min(a_hi), a_lo.max(a_hi));
            let margin = 0.1 * (hi_b - lo_b);
            if !a.is_finite() || a < lo_b + margin || a > hi_b - margin {
                a = a_lo + 0.5 * w;
            }
            let xa = axpy(x, a, d);
            let (fa, ga) = self.eval(&xa)?;
            let dphi = dot(&ga, d);
            if fa > f0 + c1 * a * dphi0 || fa >= f_lo {
                (a_hi, f_hi) = (a, fa);
            } else {
                if dphi.abs() <= -c2 * dphi0 {
                    return Ok(Search::Accepted(fa, xa, ga));
                }
                if dphi * (a_hi - a_lo) >= 0.0 {
                    (a_hi, f_hi) = (a_lo, f_lo);
                }
                (a_lo, f_lo, dphi_lo) = (a, fa, dphi);
            }
            if (a_hi - a_lo).abs() < 1e-16 * a_lo.abs().max(1.0) {
                break;
            }
        }
        if f_lo < f0 && a_lo > 0.0 {
            let xa = axpy(x, a_lo, d);
            if self.exhausted() {
                return Ok(Search::Budget);
            }
            let (fa, ga) = self.eval(&xa)?;
            return Ok(Search::Accepted(fa, xa, ga));
        }
        Ok(Search::Failed)
    }
}

fn lbfgs_core<T: Real, FG>(fg: FG, x0: &[T], opts: &LbfgsOptions, cost: usize) -> Result<OptResult<T>>
where
    FG: FnMut(&[T]) -> Result<(f64, Vec<f64>)>,
{
    opts.validate()?;
    if x0.is_empty() {
        return Err(Error::Empty("initial point"));
    }
    let mut drv = Driver { fg, opts, cost, calls: 0, best: None, candidates: Vec::new(), _t: std::marker::PhantomData };
    let mut history = Vec::new();
    let mut x = to_f64(x0);
    let (mut f, mut g) = drv.eval(&x)?;
    let push = |drv: &mut Driver<T, FG>, history: &mut Vec<IterRecord>| {
        history.push(IterRecord {
            iter: history.len() + 1,
            phase: Phase::Lbfgs,
            fevals: drv.calls * drv.cost,
            candidates: std::mem::take(&mut drv.candidates),
            best_f: drv.best.as_ref().map(|b| b.1).expect("evaluated"),
            sigma: None,
        });
    };
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let termination = loop {
        if norm(&g) < opts.gtol {
            break Termination::GradientNorm;
        }
        if drv.exhausted() {
            break Termination::MaxFevals;
        }
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * dot(s, &q);
            q = axpy(&q, -a, y);
            alphas.push(a);
        }
        if let Some((s, y, _)) = mem.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q = axpy(&q, a - b, s);
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        if dot(&d, &g) >= 0.0 {
            mem.clear();
            d = g.iter().map(|v| -v).collect();
        }
        let alpha0 = if mem.is_empty() { (1.0 / norm(&g)).min(1.0) } else { 1.0 };
        match drv.line_search(&x, f, &g, &d, alpha0)? {
            Search::Accepted(f_new, x_new, g_new) => {
                let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > f64::EPSILON * dot(&y, &y) {
                    if mem.len() == opts.memory {
                        mem.pop_front();
                    }
                    mem.push_back((s, y, 1.0 / sy));
                }
                let rel = (f - f_new) / f.abs().max(f_new.abs()).max(1.0);
                (x, f, g) = (x_new, f_new, g_new);
                push(&mut drv, &mut history);
                if rel <= opts.ftol {
                    break Termination::FunctionChange;
                }
            }
            Search::Budget => break Termination::MaxFevals,
            Search::Failed => break Termination::LineSearch,
        }
    };
    if !drv.candidates.is_empty() || history.is_empty() {
        push(&mut drv, &mut history);
    }
    let (bx, bf) = drv.best.expect("evaluated");
    Ok(OptResult {
        best_x: bx.into_iter().map(T::of).collect(),
        best_f: bf,
        n_evals: drv.calls * cost,
        history,
        termination,
    })
}

/// L-BFGS on a value-and-gradient oracle; stops after `maxfun` oracle calls
/// or once the gradient norm falls below `gtol`.
pub fn lbfgs_minimize<T: Real, FG>(fg: FG, x0: &[T], opts: &LbfgsOptions) -> Result<OptResult<T>>
where
    FG: FnMut(&[T]) -> Result<(f64, Vec<f64>)>,
{
    lbfgs_core(fg, x0, opts, 1)
}

/// L-BFGS with central-difference gradients. `maxfun` counts value-and-
/// gradient points; `n_evals` counts every objective call (2n + 1 per point).
pub fn lbfgs_fd<T: Real, F>(mut f: F, x0: &[T], opts: &LbfgsOptions) -> Result<OptResult<T>>
where
    F: FnMut(&[T]) -> Result<f64>,
{
    let eps = opts.fd_eps;
    let fg = |x: &[T]| -> Result<(f64, Vec<f64>)> {
        let v = f(x)?;
        let g = fd_gradient(&mut f, x, eps)?;
        Ok((v, g))
    };
    lbfgs_core(fg, x0, opts, 2 * x0.len() + 1)
}
