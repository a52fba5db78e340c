mod common;

use std::f64::consts::PI;

use cgnn_core::criteria::{asymptotic_gap, h7_value, uniform_grid, Probe};
use cgnn_core::dde::{eval_u, eval_v, rhs, KernelRule, QuadraturePlan};
use cgnn_core::experiments::{example5_pair, BuiltinName};
use cgnn_core::memory::{History, InitialFunction, PHI_CHECK_HORIZON};
use cgnn_core::model::{kernel_tail_cutoff, KernelMeasure};

use common::*;

fn history_at_zero(phi: &[&str]) -> History {
    History::new(InitialFunction::parse(phi, 1.0).unwrap(), 0.0, PHI_CHECK_HORIZON).unwrap()
}

#[test]
fn initial_histories_sample_at_zero() {
    let h = history_at_zero(&["-exp(s)/2", "cos(s)/2"]);
    assert_eq!(h.sample(0.0).unwrap(), vec![-0.5, 0.5]);
    let h = history_at_zero(&["sin(s)", "exp(s)-1"]);
    assert_eq!(h.sample(0.0).unwrap(), vec![0.0, 0.0]);
}

#[test]
fn example5_coupling_and_rhs_at_zero() {
    let spec = BuiltinName::Example5.spec();
    let plan = QuadraturePlan::build(&spec, 1e-9);
    let h = history_at_zero(&["-exp(s)/2", "cos(s)/2"]);
    let u1 = eval_u(&spec, 0, 0.0, &h).unwrap();
    assert!((u1 - 0.616_156_209_680_013).abs() <= 1e-12, "{u1}");
    let dx = rhs(&spec, 0.0, &h, &plan).unwrap();
    assert!((dx[0] - 6.568_528_177_528_5).abs() <= 1e-9, "{}", dx[0]);
}

#[test]
fn delay_at_half_pi() {
    let spec = BuiltinName::Example5.spec();
    let tau = spec.c_terms[0].tau.tau.eval(&[PI / 2.0]).unwrap();
    assert!((tau - 1.0).abs() < 1e-15);
}

#[test]
fn exponential_memory_of_constant_history() {
    let spec = kernel_probe(r#"{ type = "exponential", rate = 1.0 }"#);
    let plan = QuadraturePlan::build(&spec, 1e-9);
    for c in [-2.0, 0.7, 3.5] {
        let v = eval_v(&spec, 0, 10.0, &FnSource(|_, _| c), &plan).unwrap();
        assert!((v - c).abs() <= 1e-8, "{c}: {v}");
    }
}

#[test]
fn exponential_memory_of_growing_history() {
    // int_0^inf e^{-u} e^{-u} du = 1/2
    let spec = kernel_probe(r#"{ type = "exponential", rate = 1.0 }"#);
    let plan = QuadraturePlan::build(&spec, 1e-9);
    let v = eval_v(&spec, 0, 0.0, &FnSource(|t, _| t.exp()), &plan).unwrap();
    assert!((v - 0.5).abs() <= 1e-6, "{v}");
}

#[test]
fn atom_reads_one_lagged_value() {
    let spec = kernel_probe(r#"{ type = "atom", lag = 2.0 }"#);
    let plan = QuadraturePlan::build(&spec, 1e-9);
    let v = eval_v(&spec, 0, 5.0, &FnSource(|t, _| t), &plan).unwrap();
    assert_eq!(v, 3.0);
}

#[test]
fn gamma_memory_of_linear_history() {
    // mean lag of gamma(2, 1) is 2
    let spec = kernel_probe(r#"{ type = "gamma", shape = 2.0, rate = 1.0 }"#);
    let plan = QuadraturePlan::build(&spec, 1e-12);
    let v = eval_v(&spec, 0, 7.0, &FnSource(|t, _| t), &plan).unwrap();
    assert!((v - 5.0).abs() <= 1e-8, "{v}");
}

#[test]
fn tail_tolerance_is_consistent() {
    let spec = kernel_probe(r#"{ type = "exponential", rate = 0.5 }"#);
    let src = FnSource(|t: f64, _| t.sin());
    let coarse = eval_v(&spec, 0, 3.0, &src, &QuadraturePlan::build(&spec, 1e-6)).unwrap();
    let fine = eval_v(&spec, 0, 3.0, &src, &QuadraturePlan::build(&spec, 1e-12)).unwrap();
    assert!((coarse - fine).abs() <= 2e-6, "{coarse} vs {fine}");
}

#[test]
fn tail_cutoffs() {
    let exp = kernel_tail_cutoff(&KernelMeasure::Exponential { rate: 1.0 }, 1e-6);
    assert!((exp - 1e6f64.ln()).abs() <= 1e-3, "{exp}");
    let gamma = kernel_tail_cutoff(&KernelMeasure::Gamma { shape: 2.0, rate: 1.0 }, 1e-6);
    assert!((gamma - 16.6884).abs() <= 1e-3, "{gamma}");
    let rule = KernelRule::build(&KernelMeasure::Exponential { rate: 1.0 }, 1e-6);
    assert!((rule.total_weight() - (1.0 - 1e-6)).abs() <= 1e-10);
}

#[test]
fn criterion_value_at_half_pi() {
    let spec = BuiltinName::Example5.spec();
    let v = h7_value(&spec, &[1.0, 1.0], PI / 2.0);
    assert!((v[1] + 2.584_240_847_298_476).abs() <= 1e-12, "{v:?}");
}

#[test]
fn coefficient_gap_decays_like_exp() {
    let pair = example5_pair();
    let grid = uniform_grid(0.0, 40.0, 0.01);
    let curve = asymptotic_gap(&pair, &Probe::Zero, &grid);
    let c = curve.series.iter().find(|s| s.name == "c[1,2,1,1]").unwrap();
    let at20 = c.values[2000];
    assert!((at20 - 2.061_153_622_438_558e-9).abs() <= 1e-15, "{at20}");
    assert!(curve.verdict());
}
