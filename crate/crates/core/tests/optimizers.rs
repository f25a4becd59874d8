use proptest::prelude::*;
use qtwin::optim::{cma_pre_lbfgs, fd_gradient, lbfgs_fd, lbfgs_minimize, minimize_cmaes, AskTell, Cmaes, CmaesOptions, LbfgsOptions, Phase, Termination};
use qtwin::Result;

fn sphere(x: &[f64]) -> Result<f64> {
    Ok(x.iter().map(|v| v * v).sum())
}

fn rosenbrock(x: &[f64]) -> Result<(f64, Vec<f64>)> {
    let (a, b) = (x[0], x[1]);
    let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
    Ok((f, vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)]))
}

#[test]
fn cmaes_solves_five_dimensional_sphere() {
    let opts = CmaesOptions { spread: 0.5, maxfevals: 2000, tolfun: 0.0, ftarget: Some(1e-8), seed: 11, ..Default::default() };
    let r = minimize_cmaes(sphere, &[0.8, -0.6, 0.4, 0.9, -0.3], &opts).unwrap();
    assert_eq!(r.termination, Termination::Ftarget);
    assert!(r.best_f <= 1e-8 && r.n_evals <= 2000, "{} after {}", r.best_f, r.n_evals);
}

#[test]
fn lbfgs_solves_rosenbrock() {
    let r = lbfgs_minimize(rosenbrock, &[-1.2, 1.0], &LbfgsOptions { maxfun: 150, ..Default::default() }).unwrap();
    assert!((r.best_x[0] - 1.0).abs() < 1e-6 && (r.best_x[1] - 1.0).abs() < 1e-6, "{:?}", r.best_x);
    assert!(r.n_evals <= 150);
}

#[test]
fn ask_tell_loop_by_hand() {
    let opts = CmaesOptions { popsize: Some(6), spread: 0.3, maxfevals: 600, tolfun: 0.0, init_point: true, seed: 2, ..Default::default() };
    let x0 = [0.5, -0.5];
    let mut es = Cmaes::new(&x0, opts).unwrap();
    assert_eq!(es.dim(), 2);
    let mut first = true;
    let stop = loop {
        let xs = es.ask().unwrap();
        assert_eq!(xs.len(), 6);
        if first {
            assert_eq!(xs[0], x0.to_vec());
            first = false;
        }
        let fs: Vec<f64> = xs.iter().map(|x| sphere(x).unwrap()).collect();
        if let Some(t) = es.tell(&fs).unwrap() {
            break t;
        }
    };
    assert_eq!(stop, Termination::MaxFevals);
    let r = es.result().unwrap();
    assert_eq!(r.n_evals, 600);
    assert!(r.best_f < 1e-10);
    assert!(r.history.windows(2).all(|w| w[1].best_f <= w[0].best_f));
}

#[test]
fn hybrid_history_is_cmaes_then_lbfgs() {
    let cma = CmaesOptions { popsize: Some(8), maxfevals: 80, tolfun: 0.0, seed: 4, ..Default::default() };
    let r = cma_pre_lbfgs(sphere, &[0.3, 0.2, -0.1], &cma, &LbfgsOptions::default()).unwrap();
    let split = r.history.iter().position(|h| h.phase == Phase::Lbfgs).unwrap();
    assert!(r.history[..split].iter().all(|h| h.phase == Phase::Cmaes));
    assert!(r.history[split..].iter().all(|h| h.phase == Phase::Lbfgs));
    assert!(r.history.windows(2).all(|w| w[1].fevals > w[0].fevals && w[1].best_f <= w[0].best_f));
    assert!(r.best_f < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fd_gradient_matches_cubic(c in prop::collection::vec(-3.0..3.0f64, 10), x in prop::collection::vec(-2.0..2.0f64, 3)) {
        // c0 + Σ ci xi + c4 x0² x1 + c5 x1³ + c6 x0 x1 x2 + c7 x2² + c8 x0³ + c9 x2³
        let mut f = |v: &[f64]| -> Result<f64> {
            Ok(c[0] + c[1] * v[0] + c[2] * v[1] + c[3] * v[2] + c[4] * v[0] * v[0] * v[1] + c[5] * v[1].powi(3)
                + c[6] * v[0] * v[1] * v[2] + c[7] * v[2] * v[2] + c[8] * v[0].powi(3) + c[9] * v[2].powi(3))
        };
        let exact = [
            c[1] + 2.0 * c[4] * x[0] * x[1] + c[6] * x[1] * x[2] + 3.0 * c[8] * x[0] * x[0],
            c[2] + c[4] * x[0] * x[0] + 3.0 * c[5] * x[1] * x[1] + c[6] * x[0] * x[2],
            c[3] + c[6] * x[0] * x[1] + 2.0 * c[7] * x[2] + 3.0 * c[9] * x[2] * x[2],
        ];
        let g = fd_gradient(&mut f, &x, 1e-5).unwrap();
        let scale = exact.iter().map(|v| v.abs()).fold(1.0, f64::max);
        for (a, b) in g.iter().zip(&exact) {
            prop_assert!((a - b).abs() <= 1e-6 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn lbfgs_never_increases_best_on_quadratics(d in prop::collection::vec(0.1..10.0f64, 4), x0 in prop::collection::vec(-1.0..1.0f64, 4)) {
        let f = |x: &[f64]| -> Result<f64> { Ok(x.iter().zip(&d).map(|(v, w)| w * v * v).sum()) };
        let r = lbfgs_fd(f, &x0, &LbfgsOptions { maxfun: 60, ..Default::default() }).unwrap();
        prop_assert!(r.history.windows(2).all(|w| w[1].best_f <= w[0].best_f));
        prop_assert!(r.best_f <= f(&x0).unwrap());
        prop_assert!(r.best_f < 1e-8);
    }

    #[test]
    fn cmaes_best_is_minimum_of_candidates(seed in 0u64..1000, n in 1usize..5) {
        let opts = CmaesOptions { maxfevals: 120, tolfun: 0.0, seed, ..Default::default() };
        let r = minimize_cmaes(sphere, &vec![0.5; n], &opts).unwrap();
        let min = r.history.iter().flat_map(|h| h.candidates.iter().map(|c| c.f)).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(r.best_f, min);
        prop_assert_eq!(r.n_evals, r.history.iter().map(|h| h.candidates.len()).sum::<usize>());
    }
}
