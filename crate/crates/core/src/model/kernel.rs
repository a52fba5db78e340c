//! Unit-mass kernel measures on (-inf, 0].
//!
//! A kernel is described by its lag distribution: for a density K on
//! [0, inf) the measure is eta(s) = int_{-inf}^{s} K(-v) dv, and an atom at
//! lag `a` is a jump at s = -a. Masses over a window [s_lo, s_hi] count
//! lags u with -s_hi < u <= -s_lo, except that the closed endpoint s_hi = 0
//! includes lag 0. With this convention an atom at lag `a` lies in the tail
//! (-inf, -T] only when a > T.

use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::expr::Expr;
use crate::quadrature;

use super::ModelError;

/// Normalization tolerance on total mass.
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelMeasure {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Atom { lag: f64 },
    /// User density in `u` on the declared finite support [0, support].
    Density { expr: Expr, support: f64 },
    Mixture(Vec<(f64, KernelMeasure)>),
}

const DENSITY_PANELS_PER_UNIT: usize = 4;
const DENSITY_ORDER: usize = 16;

impl KernelMeasure {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            Self::Exponential { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(ModelError::Kernel(format!("exponential rate must be > 0, got {rate}")));
                }
            }
            Self::Gamma { shape, rate } => {
                if !(*shape >= 1.0 && shape.is_finite()) {
                    return Err(ModelError::Kernel(format!("gamma shape must be >= 1, got {shape}")));
                }
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(ModelError::Kernel(format!("gamma rate must be > 0, got {rate}")));
                }
            }
            Self::Atom { lag } => {
                if !(*lag >= 0.0 && lag.is_finite()) {
                    return Err(ModelError::Kernel(format!("atom lag must be >= 0, got {lag}")));
                }
            }
            Self::Density { expr, support } => {
                if !(*support > 0.0 && support.is_finite()) {
                    return Err(ModelError::Kernel(format!(
                        "density support must be finite and > 0, got {support}"
                    )));
                }
                let (nodes, _) = self.density_rule(0.0, *support);
                for u in nodes.iter().copied().chain([0.0, *support]) {
                    let k = expr.eval(&[u]).map_err(|e| {
                        ModelError::Kernel(format!("density `{expr}` fails at u = {u}: {e}"))
                    })?;
                    if k < 0.0 {
                        return Err(ModelError::Kernel(format!(
                            "density `{expr}` is negative at u = {u} ({k})"
                        )));
                    }
                }
                let mass = self.density_mass(0.0, *support);
                if (mass - 1.0).abs() > MASS_TOLERANCE {
                    let shown = (mass * 1e9).round() / 1e9;
                    return Err(ModelError::Kernel(format!(
                        "density `{expr}` has mass {shown} on [0, {support}], expected 1"
                    )));
                }
            }
            Self::Mixture(parts) => {
                if parts.is_empty() {
                    return Err(ModelError::Kernel("empty mixture".into()));
                }
                let mut total = 0.0;
                for (w, k) in parts {
                    if !(*w > 0.0) {
                        return Err(ModelError::Kernel(format!("mixture weight must be > 0, got {w}")));
                    }
                    k.validate()?;
                    total += w;
                }
                if (total - 1.0).abs() > MASS_TOLERANCE {
                    return Err(ModelError::Kernel(format!("mixture weights sum to {total}, expected 1")));
                }
            }
        }
        Ok(())
    }

    /// Mass of lags strictly greater than `lag` (the tail beyond `-lag`).
    pub fn tail_beyond(&self, lag: f64) -> f64 {
        let lag = lag.max(0.0);
        match self {
            Self::Exponential { rate } => (-rate * lag).exp(),
            Self::Gamma { shape, rate } => {
                if lag == 0.0 {
                    1.0
                } else {
                    gamma_ur(*shape, rate * lag)
                }
            }
            Self::Atom { lag: a } => {
                if *a > lag {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Density { support, .. } => {
                if lag >= *support {
                    0.0
                } else {
                    self.density_mass(lag, *support).clamp(0.0, 1.0)
                }
            }
            Self::Mixture(parts) => parts.iter().map(|(w, k)| w * k.tail_beyond(lag)).sum(),
        }
    }

    /// Mass of lags in [0, lag], lag 0 included.
    fn head_upto(&self, lag: f64) -> f64 {
        match self {
            Self::Exponential { rate } => -(-rate * lag).exp_m1(),
            Self::Gamma { shape, rate } => {
                if lag <= 0.0 {
                    0.0
                } else {
                    gamma_lr(*shape, rate * lag)
                }
            }
            Self::Atom { lag: a } => {
                if *a <= lag {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Density { support, .. } => self.density_mass(0.0, lag.min(*support)),
            Self::Mixture(parts) => parts.iter().map(|(w, k)| w * k.head_upto(lag)).sum(),
        }
    }

    fn density_rule(&self, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        let panels = (((hi - lo) * DENSITY_PANELS_PER_UNIT as f64).ceil() as usize).max(1);
        quadrature::composite(lo, hi, panels, DENSITY_ORDER)
    }

    fn density_mass(&self, lo: f64, hi: f64) -> f64 {
        let Self::Density { expr, .. } = self else {
            unreachable!("density_mass on a closed-form kernel")
        };
        if hi <= lo {
            return 0.0;
        }
        let (nodes, weights) = self.density_rule(lo, hi);
        nodes
            .iter()
            .zip(&weights)
            .map(|(u, w)| w * expr.eval_unchecked(&[*u]))
            .sum()
    }

    /// Atoms as (lag, mass) pairs.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            Self::Atom { lag } => vec![(*lag, 1.0)],
            Self::Mixture(parts) => parts
                .iter()
                .flat_map(|(w, k)| k.atoms().into_iter().map(move |(a, m)| (a, w * m)))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Continuous (non-atomic) components with their weights.
    pub(crate) fn continuous_parts(&self) -> Vec<(f64, &KernelMeasure)> {
        match self {
            Self::Atom { .. } => Vec::new(),
            Self::Mixture(parts) => parts
                .iter()
                .flat_map(|(w, k)| k.continuous_parts().into_iter().map(move |(m, c)| (w * m, c)))
                .collect(),
            other => vec![(1.0, other)],
        }
    }

    /// Density value at lag `u` for a non-atomic, non-mixture kernel.
    pub(crate) fn density_at(&self, u: f64) -> f64 {
        match self {
            Self::Exponential { rate } => rate * (-rate * u).exp(),
            Self::Gamma { shape, rate } => {
                if u <= 0.0 {
                    return if *shape == 1.0 { *rate } else { 0.0 };
                }
                let log = shape * rate.ln() + (shape - 1.0) * u.ln()
                    - rate * u
                    - ln_gamma(*shape);
                log.exp()
            }
            Self::Density { expr, support } => {
                if u > *support {
                    0.0
                } else {
                    expr.eval_unchecked(&[u])
                }
            }
            Self::Atom { .. } | Self::Mixture(_) => unreachable!("no density for atoms or mixtures"),
        }
    }

    /// Whether a finite exponential moment int e^{mu u} K(u) du exists for some mu > 0.
    pub fn has_exponential_moment(&self) -> Option<bool> {
        match self {
            Self::Exponential { .. } | Self::Gamma { .. } | Self::Atom { .. } | Self::Density { .. } => {
                Some(true)
            }
            Self::Mixture(parts) => parts
                .iter()
                .map(|(_, k)| k.has_exponential_moment())
                .try_fold(true, |acc, v| v.map(|v| acc && v)),
        }
    }
}

/// eta(s_hi) - eta(s_lo) for s_lo <= s_hi <= 0; `s_lo` may be `-inf`.
pub fn kernel_mass(k: &KernelMeasure, s_lo: f64, s_hi: f64) -> f64 {
    assert!(s_lo <= s_hi && s_hi <= 0.0, "need s_lo <= s_hi <= 0");
    // lags in (-s_hi, -s_lo], or [0, -s_lo] when s_hi = 0
    let mass = if s_lo == f64::NEG_INFINITY {
        if s_hi == 0.0 {
            1.0
        } else {
            k.tail_beyond(-s_hi)
        }
    } else {
        let lower = if s_hi == 0.0 { 0.0 } else { k.head_upto(-s_hi) };
        k.head_upto(-s_lo) - lower
    };
    mass.clamp(0.0, 1.0)
}

/// Smallest lag T (to bisection precision) with kernel_mass(k, -inf, -T) <= eps.
///
/// Atom lags are returned exactly when the cutoff lands on one.
pub fn kernel_tail_cutoff(k: &KernelMeasure, eps: f64) -> f64 {
    assert!(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
    if k.tail_beyond(0.0) <= eps {
        return 0.0;
    }
    let mut hi = 1.0;
    while k.tail_beyond(hi) > eps {
        hi *= 2.0;
        assert!(hi < 1e12, "kernel tail does not decay");
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if k.tail_beyond(mid) <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    for (a, _) in k.atoms() {
        if a >= lo && a <= hi && k.tail_beyond(a) <= eps {
            return a;
        }
    }
    hi
}
