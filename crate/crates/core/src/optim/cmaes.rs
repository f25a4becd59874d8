use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_finite, to_f64, AskTell, Candidate, IterRecord, OptResult, Phase, Termination};
use crate::{Error, Real, Result};

/// How `tolfun` is tested after each generation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TolFunMode {
    /// Best-so-far improvement over the last generation is below `tolfun`.
    Improvement,
    /// Spread of the current generation's values and of the recent
    /// generation bests is below `tolfun` (needs 10 generations of history).
    #[default]
    Range,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmaesOptions {
    /// Defaults to `4 + ⌊3 ln n⌋`.
    #[serde(default)]
    pub popsize: Option<usize>,
    #[serde(default = "default_maxfevals")]
    pub maxfevals: usize,
    #[serde(default = "default_tolfun")]
    pub tolfun: f64,
    #[serde(default)]
    pub tolfun_mode: TolFunMode,
    /// Initial step size in scaled coordinates.
    #[serde(default = "default_spread")]
    pub spread: f64,
    #[serde(default)]
    pub init_point: bool,
    #[serde(default)]
    pub ftarget: Option<f64>,
    /// Generations without best-so-far improvement before stopping.
    #[serde(default)]
    pub stop_at_convergence: Option<usize>,
    #[serde(default)]
    pub stop_at_sigma: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_maxfevals() -> usize {
    10_000
}
fn default_tolfun() -> f64 {
    1e-11
}
fn default_spread() -> f64 {
    0.1
}

impl Default for CmaesOptions {
    fn default() -> Self {
        Self {
            popsize: None,
            maxfevals: default_maxfevals(),
            tolfun: default_tolfun(),
            tolfun_mode: TolFunMode::default(),
            spread: default_spread(),
            init_point: false,
            ftarget: None,
            stop_at_convergence: None,
            stop_at_sigma: None,
            seed: 0,
        }
    }
}

impl CmaesOptions {
    pub fn validate(&self) -> Result<()> {
        if matches!(self.popsize, Some(p) if p < 2) {
            return Err(Error::Precondition("popsize must be at least 2".into()));
        }
        if !(self.spread > 0.0 && self.spread <= 1.0) {
            return Err(Error::Precondition(format!("spread must lie in (0, 1], got {}", self.spread)));
        }
        if self.maxfevals == 0 {
            return Err(Error::Precondition("maxfevals must be positive".into()));
        }
        if !(self.tolfun >= 0.0) {
            return Err(Error::Precondition(format!("tolfun must be non-negative, got {}", self.tolfun)));
        }
        Ok(())
    }
}

/// Covariance matrix adaptation evolution strategy with rank-one and
/// rank-μ updates and cumulative step-size adaptation.
#[derive(Clone, Debug)]
pub struct Cmaes<T: Real = f64> {
    opts: CmaesOptions,
    n: usize,
    lambda: usize,
    weights: Vec<T>,
    mueff: T,
    cc: T,
    cs: T,
    c1: T,
    cmu: T,
    damps: T,
    chi_n: T,
    mean: DVector<T>,
    sigma: T,
    cov: DMatrix<T>,
    basis: DMatrix<T>,
    scales: DVector<T>,
    pc: DVector<T>,
    ps: DVector<T>,
    x0: DVector<T>,
    rng: ChaCha8Rng,
    generation: usize,
    fevals: usize,
    pending: Option<Vec<DVector<T>>>,
    best: Option<(Vec<T>, f64)>,
    gen_bests: Vec<f64>,
    stall: usize,
    history: Vec<IterRecord>,
    terminated: Option<Termination>,
}

impl<T: Real> Cmaes<T> {
    pub fn new(x0: &[T], opts: CmaesOptions) -> Result<Self> {
        opts.validate()?;
        let n = x0.len();
        if n == 0 {
            return Err(Error::Empty("initial point"));
        }
        if let Some(v) = x0.iter().find(|v| !v.f64().is_finite()) {
            return Err(Error::NonFinite(format!("initial point contains {}", v.f64())));
        }
        let nf = n as f64;
        let lambda = opts.popsize.unwrap_or(4 + (3.0 * nf.ln()).floor() as usize);
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu).map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln()).collect();
        let sum: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / sum).collect();
        let mueff = 1.0 / w.iter().map(|v| v * v).sum::<f64>();
        let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
        let cs = (mueff + 2.0) / (nf + mueff + 5.0);
        let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
        let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
        let damps = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        let mean = DVector::from_column_slice(x0);
        Ok(Self {
            n,
            lambda,
            weights: w.into_iter().map(T::of).collect(),
            mueff: T::of(mueff),
            cc: T::of(cc),
            cs: T::of(cs),
            c1: T::of(c1),
            cmu: T::of(cmu),
            damps: T::of(damps),
            chi_n: T::of(chi_n),
            x0: mean.clone(),
            mean,
            sigma: T::of(opts.spread),
            cov: DMatrix::identity(n, n),
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, T::one()),
            pc: DVector::zeros(n),
            ps: DVector::zeros(n),
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
            generation: 0,
            fevals: 0,
            pending: None,
            best: None,
            gen_bests: Vec::new(),
            stall: 0,
            history: Vec::new(),
            terminated: None,
            opts,
        })
    }

    pub fn popsize(&self) -> usize {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma.f64()
    }

    pub fn mean(&self) -> Vec<T> {
        self.mean.iter().copied().collect()
    }

    pub fn fevals(&self) -> usize {
        self.fevals
    }

    pub fn history(&self) -> &[IterRecord] {
        &self.history
    }

    pub fn best(&self) -> Option<(&[T], f64)> {
        self.best.as_ref().map(|(x, f)| (x.as_slice(), *f))
    }

    pub fn termination(&self) -> Option<Termination> {
        self.terminated
    }

    /// Result so far; errors before the first `tell`.
    pub fn result(&self) -> Result<OptResult<T>> {
        let (x, f) = self.best.clone().ok_or(Error::Empty("optimizer history"))?;
        Ok(OptResult {
            best_x: x,
            best_f: f,
            n_evals: self.fevals,
            history: self.history.clone(),
            termination: self.terminated.unwrap_or(Termination::MaxFevals),
        })
    }

    fn update_eigensystem(&mut self) {
        let sym = (&self.cov + self.cov.transpose()) * T::of(0.5);
        let eig = SymmetricEigen::new(sym.clone());
        let floor = T::of(1e-300_f64.max(f64::from(f32::MIN_POSITIVE)));
        self.cov = sym;
        self.basis = eig.eigenvectors;
        self.scales = eig.eigenvalues.map(|v| if v > floor { v.sqrt() } else { floor.sqrt() });
    }

    fn check_stop(&mut self, prev_best: Option<f64>, fvals: &[f64]) -> Option<Termination> {
        let best = self.best.as_ref().map(|b| b.1).unwrap_or(f64::INFINITY);
        if matches!(self.opts.ftarget, Some(t) if best <= t) {
            return Some(Termination::Ftarget);
        }
        if self.fevals >= self.opts.maxfevals {
            return Some(Termination::MaxFevals);
        }
        let tolfun_hit = match self.opts.tolfun_mode {
            TolFunMode::Improvement => prev_best.is_some_and(|p| p - best < self.opts.tolfun),
            TolFunMode::Range => {
                let window = 10 + (30 * self.n).div_ceil(self.lambda);
                let recent = &self.gen_bests[self.gen_bests.len().saturating_sub(window)..];
                let hi = fvals.iter().chain(recent).copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = fvals.iter().chain(recent).copied().fold(f64::INFINITY, f64::min);
                self.gen_bests.len() >= 10 && hi - lo < self.opts.tolfun
            }
        };
        if tolfun_hit {
            return Some(Termination::TolFun);
        }
        if matches!(self.opts.stop_at_sigma, Some(s) if self.sigma.f64() < s) {
            return Some(Termination::StopAtSigma);
        }
        if matches!(self.opts.stop_at_convergence, Some(k) if self.stall >= k) {
            return Some(Termination::StopAtConvergence);
        }
        None
    }
}

impl<T: Real> AskTell<T> for Cmaes<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn ask(&mut self) -> Result<Vec<Vec<T>>> {
        if let Some(t) = self.terminated {
            return Err(Error::Optimizer(format!("ask after termination ({t})")));
        }
        let mut xs = Vec::with_capacity(self.lambda);
        for k in 0..self.lambda {
            if k == 0 && self.generation == 0 && self.opts.init_point {
                xs.push(self.x0.clone());
                continue;
            }
            let z = DVector::from_fn(self.n, |_, _| T::of(StandardNormal.sample(&mut self.rng)));
            let y = &self.basis * z.component_mul(&self.scales);
            xs.push(&self.mean + y * self.sigma);
        }
        let out = xs.iter().map(|x| x.iter().copied().collect()).collect();
        self.pending = Some(xs);
        Ok(out)
    }

    fn tell(&mut self, fvals: &[f64]) -> Result<Option<Termination>> {
        let xs = self.pending.take().ok_or_else(|| Error::Optimizer("tell without a pending ask".into()))?;
        if fvals.len() != xs.len() {
            let n = xs.len();
            self.pending = Some(xs);
            return Err(Error::Shape(format!("tell got {} values for {n} candidates", fvals.len())));
        }
        for &f in fvals {
            check_finite("objective value", f)?;
        }
        self.generation += 1;
        self.fevals += fvals.len();
        let sigma_used = self.sigma.f64();

        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| fvals[a].total_cmp(&fvals[b]).then(a.cmp(&b)));
        let gen_best = fvals[order[0]];
        let prev_best = self.best.as_ref().map(|b| b.1);
        if prev_best.is_none_or(|p| gen_best < p) {
            self.best = Some((xs[order[0]].iter().copied().collect(), gen_best));
            self.stall = 0;
        } else {
            self.stall += 1;
        }
        self.gen_bests.push(gen_best);

        let old = self.mean.clone();
        let mut mean = DVector::zeros(self.n);
        for (w, &i) in self.weights.iter().zip(&order) {
            mean += &xs[i] * *w;
        }
        self.mean = mean;
        let y_w = (&self.mean - &old) / self.sigma;

        let inv_sqrt = &self.basis * DMatrix::from_diagonal(&self.scales.map(|s| T::one() / s)) * self.basis.transpose();
        let two = T::of(2.0);
        self.ps = &self.ps * (T::one() - self.cs) + inv_sqrt * &y_w * (self.cs * (two - self.cs) * self.mueff).sqrt();
        let decay = 1.0 - (1.0 - self.cs.f64()).powi(2 * self.generation as i32);
        let hsig = self.ps.norm().f64() / decay.sqrt() / self.chi_n.f64() < 1.4 + 2.0 / (self.n as f64 + 1.0);
        let hs = if hsig { T::one() } else { T::zero() };
        self.pc = &self.pc * (T::one() - self.cc) + &y_w * (hs * (self.cc * (two - self.cc) * self.mueff).sqrt());

        let mut rank_mu = DMatrix::zeros(self.n, self.n);
        for (w, &i) in self.weights.iter().zip(&order) {
            let y = (&xs[i] - &old) / self.sigma;
            rank_mu += &y * y.transpose() * *w;
        }
        let rank_one = &self.pc * self.pc.transpose() + &self.cov * ((T::one() - hs) * self.cc * (two - self.cc));
        self.cov = &self.cov * (T::one() - self.c1 - self.cmu) + rank_one * self.c1 + rank_mu * self.cmu;
        self.sigma *= ((self.cs / self.damps) * (self.ps.norm() / self.chi_n - T::one())).exp();
        self.update_eigensystem();

        let best_f = self.best.as_ref().map(|b| b.1).expect("set above");
        self.history.push(IterRecord {
            iter: self.generation,
            phase: Phase::Cmaes,
            fevals: self.fevals,
            candidates: xs.iter().zip(fvals).map(|(x, &f)| Candidate { x_scaled: to_f64(x.as_slice()), f }).collect(),
            best_f,
            sigma: Some(sigma_used),
        });
        self.terminated = self.check_stop(prev_best, fvals);
        Ok(self.terminated)
    }
}

/// Run CMA-ES to termination; `f_batch` evaluates one generation and
/// returns values in candidate order.
pub fn minimize_cmaes_batch<T: Real, F>(mut f_batch: F, x0: &[T], opts: &CmaesOptions) -> Result<OptResult<T>>
where
    F: FnMut(&[Vec<T>]) -> Result<Vec<f64>>,
{
    let mut es = Cmaes::new(x0, opts.clone())?;
    loop {
        let xs = es.ask()?;
        let fvals = f_batch(&xs)?;
        if es.tell(&fvals)?.is_some() {
            return es.result();
        }
    }
}

/// Run CMA-ES to termination, evaluating candidates one at a time.
pub fn minimize_cmaes<T: Real, F>(mut f: F, x0: &[T], opts: &CmaesOptions) -> Result<OptResult<T>>
where
    F: FnMut(&[T]) -> Result<f64>,
{
    minimize_cmaes_batch(|xs: &[Vec<T>]| xs.iter().map(|x| f(x)).collect(), x0, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> Result<f64> {
        Ok(x.iter().map(|v| v * v).sum())
    }

    #[test]
    fn ask_sizes_and_init_point() {
        let x0 = [0.1, -0.2, 0.3];
        let opts = CmaesOptions { popsize: Some(10), init_point: true, ..Default::default() };
        let mut es = Cmaes::new(&x0, opts).unwrap();
        let xs = es.ask().unwrap();
        assert_eq!(xs.len(), 10);
        assert_eq!(xs[0], x0.to_vec());
        assert_ne!(xs[1], x0.to_vec());
        es.tell(&[1.0; 10]).unwrap();
        assert_ne!(es.ask().unwrap()[0], x0.to_vec());
    }

    #[test]
    fn default_popsize() {
        let es = Cmaes::<f64>::new(&[0.0; 5], CmaesOptions::default()).unwrap();
        assert_eq!(es.popsize(), 8);
    }

    #[test]
    fn full_spread_spans_the_box() {
        let opts = CmaesOptions { popsize: Some(2000), spread: 1.0, ..Default::default() };
        let mut es = Cmaes::new(&[0.0], opts).unwrap();
        let xs = es.ask().unwrap();
        let var = xs.iter().map(|x| x[0] * x[0]).sum::<f64>() / xs.len() as f64;
        assert!((var.sqrt() - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn tell_rejects_wrong_batch() {
        let mut es = Cmaes::new(&[0.0, 0.0], CmaesOptions { popsize: Some(4), ..Default::default() }).unwrap();
        assert!(es.tell(&[0.0; 4]).is_err());
        es.ask().unwrap();
        assert!(matches!(es.tell(&[0.0; 3]), Err(Error::Shape(_))));
        assert!(es.tell(&[0.0, 1.0, f64::NAN, 2.0]).is_err());
    }

    #[test]
    fn sphere_5d() {
        let opts = CmaesOptions { popsize: Some(10), spread: 0.5, maxfevals: 2000, tolfun: 0.0, ftarget: Some(1e-8), seed: 3, ..Default::default() };
        let r = minimize_cmaes(sphere, &[0.5, -0.4, 0.3, 0.2, -0.1], &opts).unwrap();
        assert!(r.best_f < 1e-8, "{}", r.best_f);
        assert!(r.n_evals <= 2000);
        assert_eq!(r.termination, Termination::Ftarget);
    }

    #[test]
    fn constant_stops_on_tolfun_both_modes() {
        for mode in [TolFunMode::Improvement, TolFunMode::Range] {
            let opts = CmaesOptions { tolfun: 1e-3, tolfun_mode: mode, ..Default::default() };
            let r = minimize_cmaes(|_: &[f64]| Ok(1.0), &[0.0, 0.0], &opts).unwrap();
            assert_eq!(r.termination, Termination::TolFun);
        }
    }

    #[test]
    fn ftarget_and_ask_after_stop() {
        let opts = CmaesOptions { ftarget: Some(4.0), ..Default::default() };
        let mut es = Cmaes::new(&[0.0, 0.0], opts).unwrap();
        let xs = es.ask().unwrap();
        let t = es.tell(&vec![3.0; xs.len()]).unwrap();
        assert_eq!(t, Some(Termination::Ftarget));
        assert!(es.ask().is_err());
    }

    #[test]
    fn seeded_runs_are_identical_and_best_is_monotone() {
        let opts = CmaesOptions { maxfevals: 200, seed: 9, ..Default::default() };
        let a = minimize_cmaes(sphere, &[0.3, 0.3, 0.3], &opts).unwrap();
        let b = minimize_cmaes(sphere, &[0.3, 0.3, 0.3], &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.history.windows(2).all(|w| w[1].best_f <= w[0].best_f));
        let min = a.history.iter().map(|r| r.iteration_best()).fold(f64::INFINITY, f64::min);
        assert_eq!(a.best_f, min);
    }

    #[test]
    fn f32_runs() {
        let opts = CmaesOptions { popsize: Some(8), spread: 0.5, maxfevals: 800, tolfun: 0.0, ..Default::default() };
        let r = minimize_cmaes(|x: &[f32]| Ok(x.iter().map(|v| f64::from(v * v)).sum()), &[0.5f32, 0.5], &opts).unwrap();
        assert!(r.best_f < 1e-6);
    }

    #[test]
    fn options_validation() {
        assert!(CmaesOptions { popsize: Some(1), ..Default::default() }.validate().is_err());
        assert!(CmaesOptions { spread: 0.0, ..Default::default() }.validate().is_err());
        assert!(CmaesOptions { spread: 1.5, ..Default::default() }.validate().is_err());
    }
}
