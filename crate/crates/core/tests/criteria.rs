mod common;

use cgnn_core::criteria::{
    default_gap_check, find_weights, h7_limsup, h7_value, perron_feasibility, validate_hypotheses, Verdict,
    WeightError, Windows,
};
use cgnn_core::experiments::{example5_pair, BuiltinName};
use cgnn_core::model::AsymptoticPair;
use proptest::prelude::*;

use common::*;

fn windows_with(d: &[f64]) -> Windows {
    Windows {
        d: Some(d.to_vec()),
        ..Windows::default()
    }
}

#[test]
fn example5_declarations_pass() {
    let report = validate_hypotheses(&BuiltinName::Example5.spec(), &windows_with(&[1.0, 1.0]));
    assert!(report.all_pass(), "{}", report.to_text());
}

#[test]
fn planted_violations_are_caught() {
    for (id, spec) in falsification_corpus() {
        let report = validate_hypotheses(&spec, &windows_with(&[1.0, 1.0]));
        match &report.get(id).verdict {
            Verdict::Fail(w) => {
                assert!(!w.point.is_empty(), "{id}: witness without a point");
                assert!(w.observed > w.declared || id == "H4", "{id}: {w}");
            }
            other => panic!("{id} not detected: {other:?}"),
        }
    }
}

#[test]
fn partner_limsup_is_well_below_zero() {
    let pair = example5_pair();
    let curve = h7_limsup(&pair.partner, &[1.0, 1.0], 200.0, 0.01, 0.5);
    assert!(curve.limsup[0] <= -1.0, "{:?}", curve.limsup);
    // sup of -(5 + cos t) + 2 |sin t|
    assert!((curve.limsup[1] - (-5.0 + 5f64.sqrt())).abs() <= 1e-4, "{:?}", curve.limsup);
}

#[test]
fn constant_network_weights() {
    let spec = constant_network(&[4.0, 4.0], &[vec![0.0, 2.0], vec![2.0, 0.0]]);
    let w = find_weights(&spec, 50.0, 0.1, 0.5).unwrap();
    assert!((w.radius - 0.5).abs() <= 1e-9);
    assert_eq!(w.d, vec![1.0, 1.0]);
    let curve = h7_limsup(&spec, &w.d, 50.0, 0.1, 0.5);
    assert_eq!(curve.limsup, vec![-2.0, -2.0]);
}

#[test]
fn overcoupled_scalar_is_infeasible() {
    let spec = constant_network(&[1.0], &[vec![5.0]]);
    match find_weights(&spec, 50.0, 0.1, 0.5) {
        Err(WeightError::Infeasible { radius }) => assert!((radius - 5.0).abs() <= 1e-9),
        other => panic!("{other:?}"),
    }
}

#[test]
fn self_pair_has_zero_gap() {
    let spec = BuiltinName::Example5.spec();
    let pair = AsymptoticPair::new(spec.clone(), spec).unwrap();
    for curve in default_gap_check(&pair) {
        assert_eq!(curve.max_gap(), 0.0);
        assert!(curve.verdict());
    }
}

#[test]
fn structurally_different_pair_is_refused() {
    let base = BuiltinName::Example5.spec();
    let other = constant_network(&[1.0], &[vec![0.5]]);
    assert!(AsymptoticPair::new(base, other).is_err());
}

#[test]
fn persistent_perturbation_is_not_asymptotic() {
    let mut doc = BuiltinName::Example5Asymptotic.document();
    doc.input[0].expr = "exp(sin(t))+0.1".into();
    let partner = cgnn_core::model::build_model(&doc).unwrap();
    let pair = AsymptoticPair::new(BuiltinName::Example5.spec(), partner).unwrap();
    let curves = default_gap_check(&pair);
    assert!(curves.iter().all(|c| c.failing().any(|s| s.name == "I[1]")));
}

fn matrix(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>)> {
    (
        prop::collection::vec(0.5f64..5.0, n),
        prop::collection::vec(prop::collection::vec(0.0f64..2.0, n), n),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn criterion_ignores_power_of_two_scaling(k in -20i32..20, t in 0.0f64..50.0, d in prop::collection::vec(0.1f64..10.0, 2)) {
        let spec = BuiltinName::Example5.spec();
        let s = 2f64.powi(k);
        let scaled: Vec<f64> = d.iter().map(|v| v * s).collect();
        prop_assert_eq!(h7_value(&spec, &d, t), h7_value(&spec, &scaled, t));
    }

    #[test]
    fn criterion_ignores_any_scaling_up_to_rounding(s in 1e-3f64..1e3, t in 0.0f64..50.0, d in prop::collection::vec(0.1f64..10.0, 2)) {
        let spec = BuiltinName::Example5.spec();
        let scaled: Vec<f64> = d.iter().map(|v| v * s).collect();
        for (a, b) in h7_value(&spec, &d, t).iter().zip(h7_value(&spec, &scaled, t)) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn returned_weights_make_the_criterion_negative((beta, k) in (2usize..5).prop_flat_map(matrix)) {
        if let Ok(w) = perron_feasibility(&beta, &k) {
            prop_assert!(w.radius < 1.0);
            prop_assert!(w.d.iter().all(|v| *v > 0.0));
            prop_assert!((w.d.iter().copied().fold(0.0, f64::max) - 1.0).abs() < 1e-15);
            let spec = constant_network(&beta, &k);
            prop_assert!(h7_limsup(&spec, &w.d, 10.0, 0.5, 0.5).verdict());
        }
    }

    #[test]
    fn weight_search_is_scale_free((beta, k) in (2usize..4).prop_flat_map(matrix), s in 0.1f64..10.0) {
        let scaled_k: Vec<Vec<f64>> = k.iter().map(|r| r.iter().map(|v| v * s).collect()).collect();
        let scaled_b: Vec<f64> = beta.iter().map(|v| v * s).collect();
        match (perron_feasibility(&beta, &k), perron_feasibility(&scaled_b, &scaled_k)) {
            (Ok(a), Ok(b)) => prop_assert!((a.radius - b.radius).abs() <= 1e-9),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!((a.map(|w| w.radius).unwrap_or(1.0) - b.map(|w| w.radius).unwrap_or(1.0)).abs() < 1e-6),
        }
    }
}
