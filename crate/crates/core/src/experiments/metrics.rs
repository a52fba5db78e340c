use thiserror::Error;

use crate::criteria::asymptotic::COMPARE_STEP;
use crate::criteria::uniform_grid;
use crate::memory::History;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("window [{t_a}, {t_b}] shifted by {shift} leaves the stored range [{lo}, {hi}]")]
    OutOfRange {
        t_a: f64,
        t_b: f64,
        shift: f64,
        lo: f64,
        hi: f64,
    },
}

fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// sup over t in [t_a, t_b] of max_i |x_i(t + omega) - x_i(t)|.
pub fn periodicity_defect(h: &History, omega: f64, t_a: f64, t_b: f64) -> Result<f64, MetricError> {
    assert!(omega > 0.0 && t_b >= t_a);
    if t_b + omega > h.t_now() + 1e-12 || t_a < h.t0() {
        return Err(MetricError::OutOfRange {
            t_a,
            t_b,
            shift: omega,
            lo: h.t0(),
            hi: h.t_now(),
        });
    }
    let mut worst: f64 = 0.0;
    for t in uniform_grid(t_a, t_b, COMPARE_STEP) {
        let later = (t + omega).min(h.t_now());
        worst = worst.max(max_abs_diff(&h.sample(later).expect("in range"), &h.sample(t).expect("in range")));
    }
    Ok(worst)
}

/// sup over [t_a, t_b] of max_i |x_i(t) - y_i(t)|.
pub fn window_gap(a: &History, b: &History, t_a: f64, t_b: f64) -> Result<f64, MetricError> {
    let hi = a.t_now().min(b.t_now());
    let lo = a.t0().max(b.t0());
    if t_b > hi + 1e-12 || t_a < lo {
        return Err(MetricError::OutOfRange {
            t_a,
            t_b,
            shift: 0.0,
            lo,
            hi,
        });
    }
    let mut worst: f64 = 0.0;
    for t in uniform_grid(t_a, t_b.min(hi), COMPARE_STEP) {
        worst = worst.max(max_abs_diff(&a.sample(t).expect("in range"), &b.sample(t).expect("in range")));
    }
    Ok(worst)
}
