mod common;

use cgnn_core::config::ConfigDocument;
use cgnn_core::dde::{integrate, DdeError, IntegratorOptions, MemoryPolicy};
use cgnn_core::experiments::{example5, static_kernel, BuiltinName, StaticKernelParams};
use cgnn_core::memory::InitialFunction;
use cgnn_core::model::{build_model, initial_conditions};

use common::*;

fn phi(k: usize) -> InitialFunction {
    initial_conditions(&example5())
        .unwrap()
        .into_iter()
        .find(|(kk, _)| *kk == k)
        .unwrap()
        .1
}

#[test]
fn exponential_decay() {
    let traj = integrate(
        &scalar_decay(),
        &InitialFunction::parse(&["1"], 1.0).unwrap(),
        0.0,
        1.0,
        &IntegratorOptions::default(),
    )
    .unwrap();
    assert!((traj.final_state()[0] - (-1.0f64).exp()).abs() <= 1e-6);
}

#[test]
fn first_lag_interval_is_linear() {
    let traj = integrate(
        &unit_lag(),
        &InitialFunction::parse(&["1"], 1.0).unwrap(),
        0.0,
        1.0,
        &IntegratorOptions::default(),
    )
    .unwrap();
    assert!(traj.final_state()[0].abs() <= 1e-6);
    let mid = traj.sample(0.3).unwrap()[0];
    assert!((mid - 0.7).abs() <= 1e-9);
}

#[test]
fn second_lag_interval_is_quadratic() {
    // x(t) = 1 - t + (t - 1)^2 / 2 on [1, 2]
    let traj = integrate(
        &unit_lag(),
        &InitialFunction::parse(&["1"], 1.0).unwrap(),
        0.0,
        2.0,
        &IntegratorOptions::default(),
    )
    .unwrap();
    assert!((traj.final_state()[0] + 0.5).abs() <= 1e-6);
}

#[test]
fn matches_euler_oracle_on_example5() {
    let oracle = euler_example5(|s| [s.sin(), s.exp() - 1.0], 1e-4, 5.0);
    let traj = integrate(&BuiltinName::Example5.spec(), &phi(3), 0.0, 5.0, &IntegratorOptions::default()).unwrap();
    let gap = euler_gap(&traj, &oracle, 10);
    assert!(gap <= 1e-3, "sup gap {gap}");
}

#[test]
fn third_order_step_halving() {
    let e = decay_errors(0.1);
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((6.0..=10.0).contains(&ratio), "ratio {ratio} from {e:?}");
    }
}

#[test]
fn runs_are_deterministic() {
    let spec = BuiltinName::Example5.spec();
    let opts = IntegratorOptions::default();
    let a = integrate(&spec, &phi(1), 0.0, 10.0, &opts).unwrap();
    let b = integrate(&spec, &phi(1), 0.0, 10.0, &opts).unwrap();
    assert_eq!(a.times, b.times);
    assert_eq!(a.states, b.states);
}

#[test]
fn fading_memory_agrees_with_full() {
    let doc = static_kernel(&StaticKernelParams {
        rate: 2.0,
        ..StaticKernelParams::default()
    })
    .unwrap();
    let spec = build_model(&doc).unwrap();
    let phi = initial_conditions(&doc).unwrap().remove(0).1;
    let full = integrate(&spec, &phi, 0.0, 40.0, &IntegratorOptions::default()).unwrap();
    let fading = integrate(
        &spec,
        &phi,
        0.0,
        40.0,
        &IntegratorOptions {
            memory: MemoryPolicy::Fading,
            ..IntegratorOptions::default()
        },
    )
    .unwrap();
    let diff = full
        .final_state()
        .iter()
        .zip(fading.final_state())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(diff <= 1e-6, "{diff}");
    assert!(fading.history.retained_span() < full.history.retained_span());
}

#[test]
fn divergent_demo_trips_the_guard() {
    let doc = ConfigDocument::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/divergent.toml")).unwrap();
    let spec = build_model(&doc).unwrap();
    let phi = initial_conditions(&doc).unwrap().remove(0).1;
    match integrate(&spec, &phi, 0.0, 40.0, &IntegratorOptions::default()) {
        Err(DdeError::Guard { t, bound, .. }) => {
            // 0.5 exp(9 t) = 1e6
            assert!((t - (2e6f64).ln() / 9.0).abs() < 1e-2, "t = {t}");
            assert_eq!(bound, 1e6);
        }
        other => panic!("{other:?}"),
    }
    let fixed = IntegratorOptions {
        fixed_step: Some(1e-3),
        ..IntegratorOptions::default()
    };
    assert!(matches!(integrate(&spec, &phi, 0.0, 40.0, &fixed), Err(DdeError::Guard { .. })));
}

#[test]
fn large_minimum_step_underflows() {
    let spec = BuiltinName::Example5.spec();
    let opts = IntegratorOptions {
        rel_tol: 1e-14,
        abs_tol: 1e-300,
        h_init: 1.0,
        h_max: 1.0,
        h_min: 0.5,
        ..IntegratorOptions::default()
    };
    assert!(matches!(integrate(&spec, &phi(1), 0.0, 5.0, &opts), Err(DdeError::Underflow { .. })));
}

#[test]
fn trajectory_csv_spans_the_run() {
    let traj = integrate(&BuiltinName::Example5.spec(), &phi(1), 0.0, 40.0, &IntegratorOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    traj.write_csv(&path).unwrap();
    let mut reader = csv::Reader::from_path(&path).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["t", "x1", "x2"]);
    let ts: Vec<f64> = reader.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
    assert_eq!(ts[0], 0.0);
    assert_eq!(*ts.last().unwrap(), 40.0);
    assert!(ts.windows(2).all(|w| w[1] > w[0]));
}
