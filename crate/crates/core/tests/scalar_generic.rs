mod common;

use common::example_config;
use qtwin::experiment::Experiment;
use qtwin::qcore::unitarity_error;
use qtwin::signals::SignalChain;
use qtwin::{Experiment32, Experiment64};

fn pair() -> (Experiment32, Experiment64) {
    let cfg = example_config(&[]);
    let f32_exp = Experiment::<f32>::new(cfg.parameter_map().unwrap(), SignalChain::new(cfg.chain.clone()).unwrap(), cfg.sim_rate).unwrap();
    (f32_exp, cfg.experiment().unwrap())
}

#[test]
fn single_precision_tracks_double() {
    let (mut lo, mut hi) = pair();
    let a = lo.compute_propagators().unwrap().clone();
    let b = hi.compute_propagators().unwrap().clone();
    for (name, u) in &a {
        assert!(unitarity_error(u) < 1e-3, "{name}");
        let diff = u.map(|z| qtwin::C64::new(z.re as f64, z.im as f64)) - &b[name];
        assert!(diff.norm() < 2e-3, "{name}: {}", diff.norm());
    }
    let (fa, fb) = (lo.gateset_infidelity().unwrap(), hi.gateset_infidelity().unwrap());
    assert!((fa - fb).abs() < 1e-3, "{fa} vs {fb}");
}
