use super::{lbfgs_fd, minimize_cmaes_batch, CmaesOptions, LbfgsOptions, OptResult};
use crate::{Real, Result};

/// CMA-ES until one of its stopping rules fires, then L-BFGS with
/// finite-difference gradients from the CMA-ES best point. The history
/// keeps both phases in order with cumulative evaluation counts.
pub fn cma_pre_lbfgs<T: Real, F>(mut f: F, x0: &[T], cma: &CmaesOptions, lbfgs: &LbfgsOptions) -> Result<OptResult<T>>
where
    F: FnMut(&[T]) -> Result<f64>,
{
    let first = minimize_cmaes_batch(|xs: &[Vec<T>]| xs.iter().map(|x| f(x)).collect(), x0, cma)?;
    let second = lbfgs_fd(&mut f, &first.best_x, lbfgs)?;
    let offset_iter = first.history.len();
    let mut history = first.history;
    let best_cma = first.best_f;
    for mut rec in second.history {
        rec.iter += offset_iter;
        rec.fevals += first.n_evals;
        rec.best_f = rec.best_f.min(best_cma);
        history.push(rec);
    }
    let (best_x, best_f) = if second.best_f < first.best_f { (second.best_x, second.best_f) } else { (first.best_x, first.best_f) };
    Ok(OptResult { best_x, best_f, n_evals: first.n_evals + second.n_evals, history, termination: second.termination })
}
