//! Right-hand side evaluation and adaptive integration.
//!
//! Delayed and distributed arguments are read from a [`StateSource`]. Between
//! steps that is the stored [`History`]; inside a step it is a stage view
//! that falls back on a provisional continuation for times beyond `t_n`.

use std::cell::Cell;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::memory::{hermite, write_trajectory_csv, History, HistoryError, InitialFunction, PHI_CHECK_HORIZON};
use crate::model::{kernel_tail_cutoff, KernelMeasure, ModelSpec};
use crate::quadrature;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DdeError {
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error("{what} is not finite at t = {t}")]
    NonFinite { what: String, t: f64 },
    #[error("{label}: delay is negative at t = {t} ({value})")]
    NegativeDelay { label: String, t: f64, value: f64 },
    #[error("blow-up guard: |x_{component}| = {value:e} exceeds {bound:e} at t = {t}")]
    Guard {
        t: f64,
        component: usize,
        value: f64,
        bound: f64,
    },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    Underflow { t: f64, h: f64 },
    #[error("invalid integrator options: {0}")]
    Options(String),
}

/// Anything that can report x_j(t) for the times a right-hand side evaluation asks for.
pub trait StateSource {
    fn state(&self, t: f64, j: usize) -> Result<f64, DdeError>;
}

impl StateSource for History {
    #[inline]
    fn state(&self, t: f64, j: usize) -> Result<f64, DdeError> {
        Ok(self.sample_component(t, j)?)
    }
}

/// Nodes `t - lag` and weights for one truncated kernel integral.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRule {
    pub cutoff: f64,
    pub lags: Vec<f64>,
    pub weights: Vec<f64>,
}

const NODES_PER_PANEL: usize = 8;
const GRADED_LEVELS: usize = 30;

impl KernelRule {
    pub fn build(k: &KernelMeasure, eps_tail: f64) -> Self {
        let cutoff = kernel_tail_cutoff(k, eps_tail);
        let mut lags = Vec::new();
        let mut weights = Vec::new();
        for (lag, mass) in k.atoms() {
            if lag <= cutoff {
                lags.push(lag);
                weights.push(mass);
            }
        }
        for (w, part) in k.continuous_parts() {
            let (len, scale, graded) = match part {
                KernelMeasure::Exponential { rate } => (cutoff, rate.max(1.0), false),
                KernelMeasure::Gamma { shape, rate } => (cutoff, rate.max(1.0), shape.fract() != 0.0),
                KernelMeasure::Density { support, .. } => (cutoff.min(*support), 1.0, false),
                _ => unreachable!("atoms and mixtures are not continuous parts"),
            };
            if len <= 0.0 {
                continue;
            }
            let panels = ((len * scale).ceil() as usize).max(1);
            let width = len / panels as f64;
            let (mut x, mut v) = if graded {
                quadrature::graded_near_zero(width, GRADED_LEVELS, NODES_PER_PANEL)
            } else {
                quadrature::composite(0.0, width, 1, NODES_PER_PANEL)
            };
            if panels > 1 {
                let (x2, v2) = quadrature::composite(width, len, panels - 1, NODES_PER_PANEL);
                x.extend(x2);
                v.extend(v2);
            }
            for (u, q) in x.into_iter().zip(v) {
                lags.push(u);
                weights.push(w * q * part.density_at(u));
            }
        }
        Self { cutoff, lags, weights }
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    #[inline]
    fn integrate(&self, src: &impl StateSource, t: f64, j: usize, g: &crate::expr::Expr) -> Result<f64, DdeError> {
        let mut acc = 0.0;
        for (lag, w) in self.lags.iter().zip(&self.weights) {
            acc += w * g.eval_unchecked(&[src.state(t - lag, j)?]);
        }
        Ok(acc)
    }
}

/// Per distributed-delay term: rules for the two integrals, `None` when the
/// outer activation ignores that argument.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraturePlan {
    pub eps_tail: f64,
    pub rules: Vec<(Option<KernelRule>, Option<KernelRule>)>,
}

impl QuadraturePlan {
    pub fn build(spec: &ModelSpec, eps_tail: f64) -> Self {
        let rules = spec
            .d_terms
            .iter()
            .map(|d| {
                (
                    d.f.uses_param(0).then(|| KernelRule::build(&d.kernel, eps_tail)),
                    d.f.uses_param(1).then(|| KernelRule::build(&d.kernel_tilde, eps_tail)),
                )
            })
            .collect();
        Self { eps_tail, rules }
    }

    /// Longest lag any rule samples.
    pub fn horizon(&self) -> f64 {
        self.rules
            .iter()
            .flat_map(|(a, b)| [a, b])
            .flatten()
            .map(|r| r.cutoff)
            .fold(0.0, f64::max)
    }
}

fn delayed(
    src: &impl StateSource,
    make_label: impl Fn() -> String,
    tau: &crate::expr::Expr,
    t: f64,
    j: usize,
) -> Result<f64, DdeError> {
    let lag = tau.eval_unchecked(&[t]);
    if !(lag >= 0.0) {
        return Err(DdeError::NegativeDelay {
            label: make_label(),
            t,
            value: lag,
        });
    }
    src.state(t - lag, j)
}

/// U_i(t, x_t) for every i.
pub fn eval_u_all(spec: &ModelSpec, t: f64, src: &impl StateSource) -> Result<Vec<f64>, DdeError> {
    let mut u = vec![0.0; spec.n];
    for term in &spec.c_terms {
        let u1 = if term.h.uses_param(0) {
            delayed(src, || term.label(), &term.tau.tau, t, term.j)?
        } else {
            0.0
        };
        let u2 = if term.h.uses_param(1) {
            delayed(src, || term.label(), &term.tau_tilde.tau, t, term.l)?
        } else {
            0.0
        };
        u[term.i] += term.c.eval_unchecked(&[t]) * term.h.eval_unchecked(&[u1, u2]);
    }
    Ok(u)
}

/// V_i(t, x_t) for every i.
pub fn eval_v_all(
    spec: &ModelSpec,
    t: f64,
    src: &impl StateSource,
    plan: &QuadraturePlan,
) -> Result<Vec<f64>, DdeError> {
    let mut v = vec![0.0; spec.n];
    for (term, (r1, r2)) in spec.d_terms.iter().zip(&plan.rules) {
        let w1 = match r1 {
            Some(r) => r.integrate(src, t, term.j, &term.g)?,
            None => 0.0,
        };
        let w2 = match r2 {
            Some(r) => r.integrate(src, t, term.l, &term.g_tilde)?,
            None => 0.0,
        };
        v[term.i] += term.d.eval_unchecked(&[t]) * term.f.eval_unchecked(&[w1, w2]);
    }
    Ok(v)
}

pub fn eval_u(spec: &ModelSpec, i: usize, t: f64, src: &impl StateSource) -> Result<f64, DdeError> {
    Ok(eval_u_all(spec, t, src)?[i])
}

pub fn eval_v(
    spec: &ModelSpec,
    i: usize,
    t: f64,
    src: &impl StateSource,
    plan: &QuadraturePlan,
) -> Result<f64, DdeError> {
    Ok(eval_v_all(spec, t, src, plan)?[i])
}

/// x'(t) with x(t) and all delayed states read from `src`.
pub fn rhs(spec: &ModelSpec, t: f64, src: &impl StateSource, plan: &QuadraturePlan) -> Result<Vec<f64>, DdeError> {
    let u = eval_u_all(spec, t, src)?;
    let v = eval_v_all(spec, t, src, plan)?;
    let mut out = Vec::with_capacity(spec.n);
    for (i, neuron) in spec.neurons.iter().enumerate() {
        let x = src.state(t, i)?;
        let a = neuron.amplification.a.eval_unchecked(&[t, x]);
        let b = neuron.self_signal.b.eval_unchecked(&[t, x]);
        let f = neuron.outer.f.eval_unchecked(&[u[i], v[i]]);
        let input = neuron.input.eval_unchecked(&[t]);
        let dx = a * (-b + f + input);
        if !dx.is_finite() {
            return Err(DdeError::NonFinite {
                what: format!("x_{}'", i + 1),
                t,
            });
        }
        out.push(dx);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MemoryPolicy {
    /// Keep every accepted step.
    Full,
    /// Drop segments older than the longest look-back seen so far.
    Fading,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub eps_tail: f64,
    pub guard_bound: f64,
    /// Take uniform steps of this size with no error control.
    pub fixed_step: Option<f64>,
    pub memory: MemoryPolicy,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            h_init: 1e-3,
            h_min: 1e-12,
            h_max: 0.1,
            eps_tail: 1e-9,
            guard_bound: 1e6,
            fixed_step: None,
            memory: MemoryPolicy::Full,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<(), DdeError> {
        let named = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("h_init", self.h_init),
            ("h_min", self.h_min),
            ("h_max", self.h_max),
            ("eps_tail", self.eps_tail),
            ("guard_bound", self.guard_bound),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DdeError::Options(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return Err(DdeError::Options("need h_min <= h_init <= h_max".into()));
        }
        if self.eps_tail >= 1.0 {
            return Err(DdeError::Options("eps_tail must be < 1".into()));
        }
        if let Some(h) = self.fixed_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(DdeError::Options(format!("fixed_step must be positive, got {h}")));
            }
        }
        Ok(())
    }
}

/// Stage view inside a step [t_n, t_n + h].
struct StepSource<'a> {
    hist: &'a History,
    t_n: f64,
    y_n: &'a [f64],
    f_n: &'a [f64],
    stage_t: f64,
    stage_y: &'a [f64],
    /// Hermite continuation of the trial step, once one exists.
    trial: Option<(f64, &'a [f64], &'a [f64])>,
    used_future: &'a Cell<bool>,
}

impl StateSource for StepSource<'_> {
    #[inline]
    fn state(&self, t: f64, j: usize) -> Result<f64, DdeError> {
        if t == self.stage_t {
            return Ok(self.stage_y[j]);
        }
        if t <= self.t_n {
            return Ok(self.hist.sample_component(t, j)?);
        }
        self.used_future.set(true);
        Ok(match self.trial {
            Some((t1, y1, f1)) => hermite(t, self.t_n, t1, self.y_n[j], y1[j], self.f_n[j], f1[j]),
            None => self.y_n[j] + (t - self.t_n) * self.f_n[j],
        })
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub history: History,
    /// Accepted step grid, starting at t0.
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub accepted: usize,
    pub rejected: usize,
    /// Steps whose stages read inside the step and were swept again.
    pub swept: usize,
    pub max_abs: f64,
    pub wall_clock: Duration,
}

#[derive(Debug, Serialize)]
struct RunReport {
    t0: f64,
    t_end: f64,
    dimension: usize,
    accepted_steps: usize,
    rejected_steps: usize,
    swept_steps: usize,
    max_abs_state: f64,
    min_step: f64,
    max_step: f64,
    clamped_history_queries: u64,
    wall_clock_seconds: f64,
}

impl Trajectory {
    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one point")
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least one point")
    }

    pub fn sample(&self, t: f64) -> Result<Vec<f64>, DdeError> {
        Ok(self.history.sample(t)?)
    }

    /// States on a uniform grid from `t_a` to `t_b` inclusive.
    pub fn resample(&self, t_a: f64, t_b: f64, step: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>), DdeError> {
        let count = ((t_b - t_a) / step).round() as usize;
        let mut times = Vec::with_capacity(count + 1);
        let mut states = Vec::with_capacity(count + 1);
        for k in 0..=count {
            let t = if k == count { t_b } else { t_a + k as f64 * step };
            times.push(t);
            states.push(self.sample(t)?);
        }
        Ok((times, states))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        write_trajectory_csv(std::io::BufWriter::new(file), &self.times, &self.states)
            .map_err(std::io::Error::other)
    }

    pub fn report(&self) -> String {
        let steps = self.times.windows(2).map(|w| w[1] - w[0]);
        let (min_step, max_step) = steps.fold((f64::INFINITY, 0.0f64), |(lo, hi), h| (lo.min(h), hi.max(h)));
        let report = RunReport {
            t0: self.t0(),
            t_end: self.t_end(),
            dimension: self.history.dim(),
            accepted_steps: self.accepted,
            rejected_steps: self.rejected,
            swept_steps: self.swept,
            max_abs_state: self.max_abs,
            min_step: if min_step.is_finite() { min_step } else { 0.0 },
            max_step,
            clamped_history_queries: self.history.clamped_queries(),
            wall_clock_seconds: self.wall_clock.as_secs_f64(),
        };
        toml::to_string(&report).expect("run report serializes")
    }
}

const SAFETY: f64 = 0.9;
const GROW_MAX: f64 = 5.0;
const SHRINK_MIN: f64 = 0.2;

struct Attempt {
    y1: Vec<f64>,
    k4: Vec<f64>,
    err: Vec<f64>,
    swept: bool,
}

fn combine(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    (0..y.len())
        .map(|c| y[c] + h * terms.iter().map(|(w, k)| w * k[c]).sum::<f64>())
        .collect()
}

/// One Bogacki–Shampine attempt from (t_n, y_n) with FSAL slope `k1`.
fn attempt(
    spec: &ModelSpec,
    plan: &QuadraturePlan,
    hist: &History,
    t_n: f64,
    y_n: &[f64],
    k1: &[f64],
    h: f64,
) -> Result<Attempt, DdeError> {
    let used_future = Cell::new(false);
    let stages = |trial: Option<(f64, &[f64], &[f64])>| -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>), DdeError> {
        let view = |stage_t: f64, stage_y: &[f64]| -> Result<Vec<f64>, DdeError> {
            let src = StepSource {
                hist,
                t_n,
                y_n,
                f_n: k1,
                stage_t,
                stage_y,
                trial,
                used_future: &used_future,
            };
            rhs(spec, stage_t, &src, plan)
        };
        let y2 = combine(y_n, h, &[(0.5, k1)]);
        let k2 = view(t_n + 0.5 * h, &y2)?;
        let y3 = combine(y_n, h, &[(0.75, &k2)]);
        let k3 = view(t_n + 0.75 * h, &y3)?;
        let y1 = combine(y_n, h, &[(2.0 / 9.0, k1), (1.0 / 3.0, &k2), (4.0 / 9.0, &k3)]);
        let k4 = view(t_n + h, &y1)?;
        Ok((k2, k3, y1, k4))
    };
    let (mut k2, mut k3, mut y1, mut k4) = stages(None)?;
    let swept = used_future.get();
    if swept {
        let (y1p, k4p) = (y1.clone(), k4.clone());
        (k2, k3, y1, k4) = stages(Some((t_n + h, &y1p, &k4p)))?;
    }
    let err = (0..y_n.len())
        .map(|c| h * (-5.0 / 72.0 * k1[c] + 1.0 / 12.0 * k2[c] + 1.0 / 9.0 * k3[c] - 1.0 / 8.0 * k4[c]))
        .collect();
    Ok(Attempt { y1, k4, err, swept })
}

/// Integrates `spec` from `t0` to `t_end` with history `phi` on (-inf, t0].
pub fn integrate(
    spec: &ModelSpec,
    phi: &InitialFunction,
    t0: f64,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory, DdeError> {
    opts.validate()?;
    if !(t_end > t0) {
        return Err(DdeError::Options(format!("t_end = {t_end} must exceed t0 = {t0}")));
    }
    if phi.dim() != spec.n {
        return Err(HistoryError::Dimension {
            expected: spec.n,
            got: phi.dim(),
        }
        .into());
    }
    let started = Instant::now();
    let plan = QuadraturePlan::build(spec, opts.eps_tail);
    let mut hist = History::new(phi.clone(), t0, PHI_CHECK_HORIZON.max(plan.horizon()))?;
    let mut y = hist.sample(t0)?;
    let mut k1 = rhs(spec, t0, &hist, &plan)?;
    hist.start(&y, &k1);

    let mut traj_times = vec![t0];
    let mut traj_states = vec![y.clone()];
    let mut max_abs = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (mut accepted, mut rejected, mut swept) = (0, 0, 0);
    let mut t = t0;
    let mut h = opts.fixed_step.unwrap_or(opts.h_init);
    let mut lookback = plan.horizon();

    while t < t_end {
        let mut step = h.min(t_end - t);
        // avoid leaving a sliver before t_end
        if t_end - (t + step) < 1e-3 * step {
            step = t_end - t;
        }
        let outcome = attempt(spec, &plan, &hist, t, &y, &k1, step);
        let (ok, ratio, att) = match outcome {
            Ok(att) => {
                let r = att
                    .err
                    .iter()
                    .enumerate()
                    .map(|(c, e)| e.abs() / (opts.abs_tol + opts.rel_tol * y[c].abs().max(att.y1[c].abs())))
                    .fold(0.0f64, f64::max);
                let finite = att.y1.iter().all(|v| v.is_finite()) && r.is_finite();
                (finite && (opts.fixed_step.is_some() || r <= 1.0), r, Some(att))
            }
            // a non-finite stage is treated as a failed step
            Err(DdeError::NonFinite { .. }) if opts.fixed_step.is_none() => (false, f64::INFINITY, None),
            Err(e) => return Err(e),
        };
        if !ok || att.is_none() {
            rejected += 1;
            let factor = if ratio.is_finite() {
                (SAFETY * ratio.powf(-1.0 / 3.0)).clamp(SHRINK_MIN, 1.0)
            } else {
                SHRINK_MIN
            };
            h = step * factor;
            if h < opts.h_min {
                return Err(DdeError::Underflow { t, h });
            }
            continue;
        }
        let att = att.expect("checked above");
        if att.swept {
            swept += 1;
        }
        let t_next = t + step;
        hist.push_knot_unchecked(t_next, &att.y1, &att.k4);
        accepted += 1;
        for (c, v) in att.y1.iter().enumerate() {
            max_abs = max_abs.max(v.abs());
            if v.abs() > opts.guard_bound {
                return Err(DdeError::Guard {
                    t: t_next,
                    component: c + 1,
                    value: v.abs(),
                    bound: opts.guard_bound,
                });
            }
        }
        t = t_next;
        y = att.y1;
        k1 = att.k4;
        traj_times.push(t);
        traj_states.push(y.clone());

        if opts.memory == MemoryPolicy::Fading {
            for term in &spec.c_terms {
                for d in [&term.tau, &term.tau_tilde] {
                    lookback = lookback.max(d.tau.eval_unchecked(&[t]));
                }
            }
            if hist.retained_span() > 2.0 * lookback + 1.0 {
                hist.truncate_before(t - lookback - 0.5, lookback)?;
            }
        }

        if opts.fixed_step.is_none() {
            let factor = if ratio == 0.0 {
                GROW_MAX
            } else {
                (SAFETY * ratio.powf(-1.0 / 3.0)).clamp(SHRINK_MIN, GROW_MAX)
            };
            h = (step * factor).min(opts.h_max);
        }
    }

    Ok(Trajectory {
        history: hist,
        times: traj_times,
        states: traj_states,
        accepted,
        rejected,
        swept,
        max_abs,
        wall_clock: started.elapsed(),
    })
}
