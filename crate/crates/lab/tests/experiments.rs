use hankel_lab::config::SchattenLabel;
use hankel_lab::{find, run_experiment, ExperimentConfig, ExperimentRecord, EXPERIMENTS};

fn strip_time(mut v: Vec<ExperimentRecord>) -> Vec<ExperimentRecord> {
    for r in &mut v {
        r.wall_ms = 0.0;
    }
    v
}

#[test]
fn single_rank_one_record() {
    let mut c = ExperimentConfig::empty("restrict-p-le-1");
    c.kernels = vec!["exp".into()];
    c.p = vec![SchattenLabel(1.0)];
    c.lambda = vec![1.0];
    c.gamma = vec![1.0];
    c.sizes = vec![32];
    let r = run_experiment(&c).unwrap();
    assert_eq!(r.len(), 1);
    // ‖H(R a)‖₁ = e^{-1}/(1−e^{-2}) (rank one), bound (1+1)·1/2.
    let exact = (-1f64).exp() / (1.0 - (-2f64).exp());
    assert!((r[0].value.unwrap() - exact).abs() < 1e-12);
    assert!((r[0].ratio.unwrap() - exact).abs() < 1e-12);
    assert_eq!(r[0].config_hash, c.hash());
    assert!(!r[0].pinned);
}

#[test]
fn counterexample_is_exact_and_slope_pinned() {
    let mut c = find("counterexample").unwrap().defaults.clone()(true);
    c.p = vec![SchattenLabel(2.0)];
    c.sizes = vec![2, 4, 8, 16, 32, 64];
    let r = run_experiment(&c).unwrap();
    for rec in r.iter().filter(|r| r.quantity == "restricted_norm") {
        assert_eq!(rec.value, Some(1.0));
        assert_eq!(rec.pass, Some(true));
    }
    let slope = r.iter().find(|r| r.quantity == "slope").unwrap();
    assert!(slope.pinned && slope.pass == Some(true));
    assert!((slope.value.unwrap() + 1.0).abs() < 0.1);
}

#[test]
fn converse_sequence_increases_towards_the_norm() {
    let c = (find("converse-sup").unwrap().defaults)(false);
    let r = run_experiment(&c).unwrap();
    let vals: Vec<f64> = r.iter().filter(|r| r.quantity == "scaled_restricted_norm").map(|r| r.value.unwrap()).collect();
    assert_eq!(vals.len(), 7);
    assert!(vals.windows(2).all(|w| w[1] >= w[0] - 1e-6));
    let last = *vals.last().unwrap();
    assert!(last > 0.5 / 3.0 && last < 1.5);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let c = (find("positive-kernel-bound").unwrap().defaults)(true);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run_experiment(&c).unwrap());
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| run_experiment(&c).unwrap());
    assert_eq!(strip_time(one), strip_time(four));
}

#[test]
fn numeric_failures_are_recorded_not_fatal() {
    // ∫ t|a|² diverges for the Carleman kernel.
    let mut c = (find("hilbert-schmidt").unwrap().defaults)(true);
    c.kernels = vec!["carleman".into(), "exp".into()];
    c.lambda.clear();
    c.sizes = vec![64];
    let r = run_experiment(&c).unwrap();
    assert_eq!(r.len(), 2);
    assert!(r[0].error.is_some() && r[0].pass == Some(false));
    assert!(r[1].error.is_none() && r[1].pass == Some(true), "{:?}", r[1]);
}

#[test]
fn unknown_labels_are_config_errors() {
    let mut c = ExperimentConfig::empty("restrict-p-le-1");
    c.kernels = vec!["nonsense".into()];
    assert!(run_experiment(&c).is_err());
    assert!(run_experiment(&ExperimentConfig::empty("no-such-experiment")).is_err());
}

#[test]
fn quick_suite_passes() {
    for e in EXPERIMENTS {
        let r = run_experiment(&(e.defaults)(true)).unwrap();
        assert!(!r.is_empty(), "{}", e.name);
        let failed: Vec<_> = r.iter().filter(|r| r.pinned && r.pass != Some(true)).collect();
        assert!(failed.is_empty(), "{}: {failed:?}", e.name);
    }
}
