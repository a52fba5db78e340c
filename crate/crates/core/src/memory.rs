//! Dense solution history on (-inf, t_now].
//!
//! Times at or before `t0` are served by the initial function in closed
//! form. Beyond `t0` the solution is stored as knots (state and derivative)
//! joined by cubic Hermite segments.

use std::collections::VecDeque;
use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HistoryError {
    #[error("initial function component {component} = {value} exceeds bound {bound} at s = {s}")]
    BoundViolation {
        component: usize,
        s: f64,
        value: f64,
        bound: f64,
    },
    #[error("initial function component {component} cannot be evaluated at s = {s}: {message}")]
    InitialEval {
        component: usize,
        s: f64,
        message: String,
    },
    #[error("query at t = {t} lies beyond t_now = {t_now}")]
    Future { t: f64, t_now: f64 },
    #[error("segment starts at {t_left} but history ends at {t_now}")]
    Gap { t_left: f64, t_now: f64 },
    #[error("segment [{t_left}, {t_right}] has no width")]
    ZeroWidth { t_left: f64, t_right: f64 },
    #[error("segment state does not match the stored knot at t = {t}")]
    Discontinuous { t: f64 },
    #[error("expected {expected} components, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("cannot truncate at {t_floor}: must be <= t_now - horizon = {limit}")]
    InsideHorizon { t_floor: f64, limit: f64 },
}

/// A bounded initial function phi(s), s <= 0, one expression in `s` per component.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialFunction {
    pub components: Vec<Expr>,
    /// Declared sup-norm bound B_phi.
    pub bound: f64,
}

impl InitialFunction {
    pub fn parse(components: &[&str], bound: f64) -> Result<Self, crate::expr::ParseError> {
        Ok(Self {
            components: components
                .iter()
                .map(|c| Expr::parse(c, &["s"]))
                .collect::<Result<_, _>>()?,
            bound,
        })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }
}

/// One Hermite piece of dense output.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub t_left: f64,
    pub t_right: f64,
    pub x_left: Vec<f64>,
    pub dx_left: Vec<f64>,
    pub x_right: Vec<f64>,
    pub dx_right: Vec<f64>,
}

/// Cubic Hermite interpolant on [t0, t1] through (y0, f0) and (y1, f1).
#[inline]
pub fn hermite(t: f64, t0: f64, t1: f64, y0: f64, y1: f64, f0: f64, f1: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1
}

/// Default look-back over which the initial function is checked against its bound.
pub const PHI_CHECK_HORIZON: f64 = 50.0;
const PHI_CHECK_STEP: f64 = 0.01;

#[derive(Debug)]
pub struct History {
    n: usize,
    phi: InitialFunction,
    t0: f64,
    times: VecDeque<f64>,
    states: VecDeque<f64>,
    derivs: VecDeque<f64>,
    clamped: AtomicU64,
}

impl Clone for History {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            phi: self.phi.clone(),
            t0: self.t0,
            times: self.times.clone(),
            states: self.states.clone(),
            derivs: self.derivs.clone(),
            clamped: AtomicU64::new(self.clamped.load(Ordering::Relaxed)),
        }
    }
}

impl History {
    /// Checks phi against its declared bound on [-check_horizon, 0].
    pub fn new(phi: InitialFunction, t0: f64, check_horizon: f64) -> Result<Self, HistoryError> {
        let steps = (check_horizon / PHI_CHECK_STEP).ceil() as usize;
        for k in 0..=steps {
            let s = -(k as f64) * PHI_CHECK_STEP;
            for (c, e) in phi.components.iter().enumerate() {
                let v = e.eval(&[s]).map_err(|err| HistoryError::InitialEval {
                    component: c + 1,
                    s,
                    message: err.to_string(),
                })?;
                if v.abs() > phi.bound {
                    return Err(HistoryError::BoundViolation {
                        component: c + 1,
                        s,
                        value: v,
                        bound: phi.bound,
                    });
                }
            }
        }
        Ok(Self {
            n: phi.dim(),
            phi,
            t0,
            times: VecDeque::new(),
            states: VecDeque::new(),
            derivs: VecDeque::new(),
            clamped: AtomicU64::new(0),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_now(&self) -> f64 {
        self.times.back().copied().unwrap_or(self.t0)
    }

    /// Oldest time served from stored segments rather than by clamping.
    pub fn truncation_floor(&self) -> f64 {
        self.times.front().copied().unwrap_or(self.t0)
    }

    pub fn initial_function(&self) -> &InitialFunction {
        &self.phi
    }

    /// Number of post-truncation queries answered by clamping.
    pub fn clamped_queries(&self) -> u64 {
        self.clamped.load(Ordering::Relaxed)
    }

    pub fn knot_count(&self) -> usize {
        self.times.len()
    }

    pub fn knot_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.times.iter().copied()
    }

    pub fn knot_state(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|c| self.states[k * self.n + c]).collect()
    }

    pub fn knot_derivative(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|c| self.derivs[k * self.n + c]).collect()
    }

    /// Span of time covered by stored segments.
    pub fn retained_span(&self) -> f64 {
        self.t_now() - self.truncation_floor()
    }

    pub fn phi_value(&self, s: f64, component: usize) -> f64 {
        self.phi.components[component].eval_unchecked(&[s])
    }

    /// Value of one component at time `t <= t_now`.
    #[inline]
    pub fn sample_component(&self, t: f64, c: usize) -> Result<f64, HistoryError> {
        if t < self.t0 || self.times.is_empty() {
            if t > self.t_now() {
                return Err(HistoryError::Future { t, t_now: self.t_now() });
            }
            return Ok(self.phi_value(t - self.t0, c));
        }
        let len = self.times.len();
        let t_now = self.times[len - 1];
        if t > t_now {
            return Err(HistoryError::Future { t, t_now });
        }
        let n = self.n;
        if t == t_now {
            return Ok(self.states[(len - 1) * n + c]);
        }
        let first = self.times[0];
        if t <= first {
            if t < first {
                self.clamped.fetch_add(1, Ordering::Relaxed);
            }
            return Ok(self.states[c]);
        }
        let k = self.times.partition_point(|&x| x <= t) - 1;
        let t_left = self.times[k];
        if t == t_left {
            return Ok(self.states[k * n + c]);
        }
        Ok(hermite(
            t,
            t_left,
            self.times[k + 1],
            self.states[k * n + c],
            self.states[(k + 1) * n + c],
            self.derivs[k * n + c],
            self.derivs[(k + 1) * n + c],
        ))
    }

    pub fn sample(&self, t: f64) -> Result<Vec<f64>, HistoryError> {
        (0..self.n).map(|c| self.sample_component(t, c)).collect()
    }

    pub fn append_segment(&mut self, seg: &Segment) -> Result<(), HistoryError> {
        for v in [&seg.x_left, &seg.dx_left, &seg.x_right, &seg.dx_right] {
            if v.len() != self.n {
                return Err(HistoryError::Dimension {
                    expected: self.n,
                    got: v.len(),
                });
            }
        }
        if seg.t_left != self.t_now() {
            return Err(HistoryError::Gap {
                t_left: seg.t_left,
                t_now: self.t_now(),
            });
        }
        if !(seg.t_right > seg.t_left) {
            return Err(HistoryError::ZeroWidth {
                t_left: seg.t_left,
                t_right: seg.t_right,
            });
        }
        if self.times.is_empty() {
            self.push_knot_unchecked(seg.t_left, &seg.x_left, &seg.dx_left);
        } else {
            let k = self.times.len() - 1;
            if seg.x_left != self.knot_state(k) || seg.dx_left != self.knot_derivative(k) {
                return Err(HistoryError::Discontinuous { t: seg.t_left });
            }
        }
        self.push_knot_unchecked(seg.t_right, &seg.x_right, &seg.dx_right);
        Ok(())
    }

    /// Starts the stored solution at `t0` with state `x` and derivative `dx`.
    pub(crate) fn start(&mut self, x: &[f64], dx: &[f64]) {
        debug_assert!(self.times.is_empty());
        self.push_knot_unchecked(self.t0, x, dx);
    }

    /// Extends the solution by one knot; the caller guarantees `t > t_now`.
    pub(crate) fn push_knot_unchecked(&mut self, t: f64, x: &[f64], dx: &[f64]) {
        self.times.push_back(t);
        self.states.extend(x.iter().copied());
        self.derivs.extend(dx.iter().copied());
    }

    /// Drops segments lying entirely before `t_floor`.
    ///
    /// `horizon` is the longest look-back the right-hand side can request;
    /// truncating inside it is refused.
    pub fn truncate_before(&mut self, t_floor: f64, horizon: f64) -> Result<(), HistoryError> {
        let limit = self.t_now() - horizon;
        if t_floor > limit {
            return Err(HistoryError::InsideHorizon { t_floor, limit });
        }
        let mut drop = 0;
        while drop + 1 < self.times.len() && self.times[drop + 1] <= t_floor {
            drop += 1;
        }
        if drop > 0 {
            self.times.drain(..drop);
            self.states.drain(..drop * self.n);
            self.derivs.drain(..drop * self.n);
        }
        Ok(())
    }
}

/// Writes `t,x1,...,xn` rows.
pub fn write_trajectory_csv<W: Write>(
    out: W,
    times: &[f64],
    states: &[Vec<f64>],
) -> Result<(), csv::Error> {
    let n = states.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for (t, x) in times.iter().zip(states) {
        let mut row = vec![t.to_string()];
        row.extend(x.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
