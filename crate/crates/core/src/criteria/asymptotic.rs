//! Gaps between a system and its asymptotic partner, and convergence of
//! solution pairs.

use std::io::Write;

use thiserror::Error;

use crate::expr::Expr;
use crate::memory::History;
use crate::model::{AsymptoticPair, CTerm, DTerm, ModelSpec};

use super::h7::uniform_grid;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvergenceError {
    #[error("trajectories share [{lo}, {hi}], shorter than three windows of {window}")]
    Disjoint { lo: f64, hi: f64, window: f64 },
}

/// Bounded probe w(t) for the self-signal comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum Probe {
    Zero,
    One,
    Sine,
    Custom(Expr),
}

impl Probe {
    pub fn defaults() -> [Probe; 3] {
        [Probe::Zero, Probe::One, Probe::Sine]
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Probe::Zero => 0.0,
            Probe::One => 1.0,
            Probe::Sine => t.sin(),
            Probe::Custom(e) => e.eval_unchecked(&[t]),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Probe::Zero => "0".into(),
            Probe::One => "1".into(),
            Probe::Sine => "sin(t)".into(),
            Probe::Custom(e) => e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapSeries {
    pub name: String,
    pub values: Vec<f64>,
    pub decays: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapCurve {
    pub probe: String,
    pub grid: Vec<f64>,
    pub series: Vec<GapSeries>,
}

impl GapCurve {
    pub fn verdict(&self) -> bool {
        self.series.iter().all(|s| s.decays)
    }

    pub fn failing(&self) -> impl Iterator<Item = &GapSeries> {
        self.series.iter().filter(|s| !s.decays)
    }

    /// Largest gap over the whole grid.
    pub fn max_gap(&self) -> f64 {
        self.series
            .iter()
            .flat_map(|s| s.values.iter().copied())
            .fold(0.0, f64::max)
    }
}

const ABSOLUTE_DECAY: f64 = 1e-6;

/// Final-fifth maximum at most 1e-6, or within round-off of the first-fifth maximum.
fn decays(values: &[f64]) -> bool {
    let fifth = (values.len() / 5).max(1);
    let head = values[..fifth].iter().copied().fold(0.0, f64::max);
    let tail = values[values.len() - fifth..].iter().copied().fold(0.0, f64::max);
    tail <= ABSOLUTE_DECAY.max(100.0 * f64::EPSILON * head)
}

fn zero_t() -> Expr {
    Expr::constant(0.0, &["t"])
}

/// All (i, j, l, p) keys present in either table.
fn keys<T>(a: &[T], b: &[T], key: impl Fn(&T) -> (usize, usize, usize, usize)) -> Vec<(usize, usize, usize, usize)> {
    let mut out: Vec<_> = a.iter().chain(b).map(&key).collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn label(prefix: char, k: (usize, usize, usize, usize)) -> String {
    format!("{prefix}[{},{},{},{}]", k.0 + 1, k.1 + 1, k.2 + 1, k.3 + 1)
}

fn push(series: &mut Vec<GapSeries>, name: String, grid: &[f64], f: impl Fn(f64) -> f64) {
    let values: Vec<f64> = grid.iter().map(|t| f(*t).abs()).collect();
    let decays = decays(&values);
    series.push(GapSeries { name, values, decays });
}

pub fn asymptotic_gap(pair: &AsymptoticPair, probe: &Probe, grid: &[f64]) -> GapCurve {
    let (a, b): (&ModelSpec, &ModelSpec) = (&pair.base, &pair.partner);
    let mut series = Vec::new();
    for i in 0..a.n {
        let (na, nb) = (&a.neurons[i], &b.neurons[i]);
        push(&mut series, format!("beta[{}]", i + 1), grid, |t| {
            na.self_signal.beta.eval_unchecked(&[t]) - nb.self_signal.beta.eval_unchecked(&[t])
        });
        push(&mut series, format!("b[{}]", i + 1), grid, |t| {
            let w = probe.value(t);
            na.self_signal.b.eval_unchecked(&[t, w]) - nb.self_signal.b.eval_unchecked(&[t, w])
        });
        push(&mut series, format!("I[{}]", i + 1), grid, |t| {
            na.input.eval_unchecked(&[t]) - nb.input.eval_unchecked(&[t])
        });
    }
    let zero = zero_t();
    let c_key = |c: &CTerm| (c.i, c.j, c.l, c.p);
    for k in keys(&a.c_terms, &b.c_terms, c_key) {
        let ta = a.c_terms.iter().find(|c| c_key(c) == k);
        let tb = b.c_terms.iter().find(|c| c_key(c) == k);
        let name = label('c', k);
        let fields: [(String, fn(&CTerm) -> &Expr); 3] = [
            (name.clone(), |c| &c.c),
            (format!("{name}.tau"), |c| &c.tau.tau),
            (format!("{name}.tau_tilde"), |c| &c.tau_tilde.tau),
        ];
        for (series_name, field) in fields {
            let ea = ta.map_or(&zero, field);
            let eb = tb.map_or(&zero, field);
            push(&mut series, series_name, grid, |t| ea.eval_unchecked(&[t]) - eb.eval_unchecked(&[t]));
        }
    }
    let d_key = |d: &DTerm| (d.i, d.j, d.l, d.p);
    for k in keys(&a.d_terms, &b.d_terms, d_key) {
        let ta = a.d_terms.iter().find(|d| d_key(d) == k).map_or(&zero, |d| &d.d);
        let tb = b.d_terms.iter().find(|d| d_key(d) == k).map_or(&zero, |d| &d.d);
        push(&mut series, label('d', k), grid, |t| {
            ta.eval_unchecked(&[t]) - tb.eval_unchecked(&[t])
        });
    }
    GapCurve {
        probe: probe.name(),
        grid: grid.to_vec(),
        series,
    }
}

/// Gap curves for the three default probes on [0, 40] with step 0.01.
pub fn default_gap_check(pair: &AsymptoticPair) -> Vec<GapCurve> {
    let grid = uniform_grid(0.0, 40.0, 0.01);
    Probe::defaults().iter().map(|p| asymptotic_gap(pair, p, &grid)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCurve {
    pub window: f64,
    pub grid: Vec<f64>,
    /// Sup over [t, t + window] of max_i |x_i - y_i|.
    pub values: Vec<f64>,
}

impl ConvergenceCurve {
    /// Value on the last full window.
    pub fn final_value(&self) -> f64 {
        *self.values.last().expect("non-empty curve")
    }

    pub fn converges(&self, tol: f64) -> bool {
        self.final_value() <= tol
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.grid.partition_point(|&g| g <= t).saturating_sub(1);
        self.values[k]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "gap"])?;
        for (t, v) in self.grid.iter().zip(&self.values) {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sample spacing of pair and periodicity comparisons.
pub const COMPARE_STEP: f64 = 0.005;

/// Sliding-window sup of the pointwise gap between two solutions.
pub fn pair_convergence(a: &History, b: &History, window: f64) -> Result<ConvergenceCurve, ConvergenceError> {
    let lo = a.t0().max(b.t0());
    let hi = a.t_now().min(b.t_now());
    if !(hi - lo >= 3.0 * window) {
        return Err(ConvergenceError::Disjoint { lo, hi, window });
    }
    let samples = uniform_grid(lo, hi, COMPARE_STEP);
    let gaps: Vec<f64> = samples
        .iter()
        .map(|&t| {
            let (x, y) = (a.sample(t).expect("inside range"), b.sample(t).expect("inside range"));
            x.iter().zip(&y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
        })
        .collect();
    let per_window = (window / COMPARE_STEP).round() as usize;
    let count = samples.len() - per_window;
    // sliding max over a monotone deque
    let mut grid = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count);
    let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    for k in 0..samples.len() {
        while deque.back().is_some_and(|&j| gaps[j] <= gaps[k]) {
            deque.pop_back();
        }
        deque.push_back(k);
        if k >= per_window {
            let start = k - per_window;
            while deque.front().is_some_and(|&j| j < start) {
                deque.pop_front();
            }
            grid.push(samples[start]);
            values.push(gaps[*deque.front().expect("non-empty")]);
        }
    }
    Ok(ConvergenceCurve { window, grid, values })
}
