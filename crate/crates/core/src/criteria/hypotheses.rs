//! Sampled checks of the standing hypotheses H1 to H7 against declared constants.
//!
//! Every check is a necessary condition on a finite grid. A pass means no
//! counterexample was found, never a proof.

use std::fmt;

use crate::expr::Expr;
use crate::model::ModelSpec;

use super::h7::{find_weights, h7_limsup, uniform_grid};

#[derive(Debug, Clone, PartialEq)]
pub struct Windows {
    pub t_max: f64,
    pub t_step: f64,
    pub u_max: f64,
    pub u_step: f64,
    /// Weights for H7; searched for when absent.
    pub d: Option<Vec<f64>>,
    /// Tail fraction for the H7 limsup estimate.
    pub tail_fraction: f64,
}

impl Default for Windows {
    fn default() -> Self {
        Self {
            t_max: 50.0,
            t_step: 0.05,
            u_max: 5.0,
            u_step: 0.025,
            d: None,
            tail_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    /// Which declared item failed, e.g. `a[1]` or `c[1,2,1,1].h`.
    pub item: String,
    /// Named coordinates of the offending sample.
    pub point: Vec<(String, f64)>,
    pub observed: f64,
    pub declared: f64,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at: Vec<String> = self.point.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(
            f,
            "{} at ({}): observed {} vs declared {}",
            self.item,
            at.join(", "),
            self.observed,
            self.declared
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    PassSampled,
    Fail(Witness),
    NotApplicable,
}

impl Verdict {
    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisEntry {
    pub id: &'static str,
    pub verdict: Verdict,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub entries: Vec<HypothesisEntry>,
    /// Weights used for H7.
    pub d: Option<Vec<f64>>,
    /// Tail limsup estimates of H7 per neuron, when weights were available.
    pub h7_limsup: Option<Vec<f64>>,
}

impl HypothesisReport {
    pub fn get(&self, id: &str) -> &HypothesisEntry {
        self.entries.iter().find(|e| e.id == id).expect("known hypothesis id")
    }

    pub fn all_pass(&self) -> bool {
        !self.entries.iter().any(|e| e.verdict.is_fail())
    }

    /// Key-value rendering, one hypothesis per table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!("[{}]\n", e.id));
            match &e.verdict {
                Verdict::PassSampled => out.push_str("verdict = \"pass-sampled\"\n"),
                Verdict::NotApplicable => out.push_str("verdict = \"not-applicable\"\n"),
                Verdict::Fail(w) => {
                    out.push_str("verdict = \"fail\"\n");
                    out.push_str(&format!("item = {:?}\n", w.item));
                    for (k, v) in &w.point {
                        out.push_str(&format!("{k} = {v:?}\n"));
                    }
                    out.push_str(&format!("observed = {:?}\ndeclared = {:?}\n", w.observed, w.declared));
                }
            }
            if let Some(note) = &e.note {
                out.push_str(&format!("note = {note:?}\n"));
            }
            out.push('\n');
        }
        if let Some(d) = &self.d {
            out.push_str(&format!("weights = {d:?}\n"));
        }
        if let Some(l) = &self.h7_limsup {
            out.push_str(&format!("h7_limsup = {l:?}\n"));
        }
        out
    }
}

fn fail(item: String, point: Vec<(&str, f64)>, observed: f64, declared: f64) -> Verdict {
    Verdict::Fail(Witness {
        item,
        point: point.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        observed,
        declared,
    })
}

/// Relative slack on declared Lipschitz and slope constants.
fn slack(declared: f64) -> f64 {
    declared.abs() * 1e-9 + 1e-12
}

const GROWTH_LIMIT: f64 = 1e6;

/// Bounded-coefficient heuristic: fails on non-finite values, values beyond
/// 1e6, or a final quarter more than twice the first quarter plus one.
fn check_bounded(item: String, e: &Expr, grid: &[f64]) -> Option<Verdict> {
    let q = grid.len() / 4;
    let mut head: f64 = 0.0;
    let mut tail: f64 = 0.0;
    let mut tail_at = grid[0];
    for (k, &t) in grid.iter().enumerate() {
        let v = e.eval_unchecked(&[t]);
        if !v.is_finite() || v.abs() > GROWTH_LIMIT {
            return Some(fail(item, vec![("t", t)], v, GROWTH_LIMIT));
        }
        if k < q.max(1) {
            head = head.max(v.abs());
        }
        if k >= grid.len() - q.max(1) && v.abs() >= tail {
            tail = v.abs();
            tail_at = t;
        }
    }
    if tail > 2.0 * head + 1.0 {
        return Some(fail(item, vec![("t", tail_at)], tail, 2.0 * head + 1.0));
    }
    None
}

fn h1(spec: &ModelSpec, tg: &[f64]) -> Verdict {
    for (i, n) in spec.neurons.iter().enumerate() {
        let items = [
            (format!("beta[{}]", i + 1), &n.self_signal.beta),
            (format!("A[{}]", i + 1), &n.amplification.big_a),
            (format!("I[{}]", i + 1), &n.input),
        ];
        for (item, e) in items {
            if let Some(v) = check_bounded(item, e, tg) {
                return v;
            }
        }
    }
    for c in &spec.c_terms {
        if let Some(v) = check_bounded(c.label(), &c.c, tg) {
            return v;
        }
    }
    for d in &spec.d_terms {
        if let Some(v) = check_bounded(d.label(), &d.d, tg) {
            return v;
        }
    }
    Verdict::PassSampled
}

const DT: f64 = 1e-5;
const DERIVATIVE_TOL: f64 = 1e-6;

fn h2(spec: &ModelSpec, tg: &[f64], ug: &[f64]) -> Verdict {
    for (i, n) in spec.neurons.iter().enumerate() {
        let amp = &n.amplification;
        let item = format!("a[{}]", i + 1);
        for &t in tg {
            let big_a = amp.big_a.eval_unchecked(&[t]);
            for &u in ug {
                let a = amp.a.eval_unchecked(&[t, u]);
                if !(a >= amp.a_lo - slack(amp.a_lo)) {
                    return fail(item, vec![("t", t), ("u", u)], a, amp.a_lo);
                }
                if !(a <= amp.a_hi + slack(amp.a_hi)) {
                    return fail(item, vec![("t", t), ("u", u)], a, amp.a_hi);
                }
                let da = (amp.a.eval_unchecked(&[t + DT, u]) - amp.a.eval_unchecked(&[(t - DT).max(0.0), u]))
                    / (t + DT - (t - DT).max(0.0));
                let lhs = big_a * a * a;
                if lhs > da + DERIVATIVE_TOL {
                    return fail(format!("A[{}]", i + 1), vec![("t", t), ("u", u)], lhs, da);
                }
            }
        }
    }
    Verdict::PassSampled
}

fn h3(spec: &ModelSpec, tg: &[f64], ug: &[f64]) -> Verdict {
    for (i, n) in spec.neurons.iter().enumerate() {
        let s = &n.self_signal;
        for &t in tg {
            let beta = s.beta.eval_unchecked(&[t]);
            let beta_star = s.beta_star.as_ref().map(|e| e.eval_unchecked(&[t]));
            let mut prev = s.b.eval_unchecked(&[t, ug[0]]);
            for w in ug.windows(2) {
                let next = s.b.eval_unchecked(&[t, w[1]]);
                let slope = (next - prev) / (w[1] - w[0]);
                prev = next;
                if !(slope >= beta - slack(beta)) {
                    return fail(format!("b[{}]", i + 1), vec![("t", t), ("u", w[0]), ("v", w[1])], slope, beta);
                }
                if let Some(bs) = beta_star {
                    if slope > bs + slack(bs) {
                        return fail(format!("b[{}]", i + 1), vec![("t", t), ("u", w[0]), ("v", w[1])], slope, bs);
                    }
                }
            }
        }
    }
    Verdict::PassSampled
}

fn h4(spec: &ModelSpec, tg: &[f64]) -> Verdict {
    let mut any = false;
    for c in &spec.c_terms {
        for (name, d) in [("tau", &c.tau), ("tau_tilde", &c.tau_tilde)] {
            if d.is_zero() {
                continue;
            }
            any = true;
            let item = format!("{}.{name}", c.label());
            if !d.declared_unbounded_growth {
                return fail(item, vec![("t", *tg.last().unwrap())], 0.0, f64::INFINITY);
            }
            let q = tg.len() / 4;
            let head = tg[..q.max(1)]
                .iter()
                .map(|t| t - d.tau.eval_unchecked(&[*t]))
                .fold(f64::NEG_INFINITY, f64::max);
            let half = tg.len() / 2;
            for &t in &tg[half..] {
                let r = t - d.tau.eval_unchecked(&[t]);
                if !(r > head) {
                    return fail(item, vec![("t", t)], r, head);
                }
            }
        }
    }
    if any {
        Verdict::PassSampled
    } else {
        Verdict::NotApplicable
    }
}

/// Adjacent-slope check of |e(u1,u2) - e(v1,u2)| <= k1 |u1 - v1| and the
/// symmetric condition in the second argument.
fn two_arg_lipschitz(item: String, e: &Expr, k1: f64, k2: f64, ug: &[f64], coarse: &[f64]) -> Option<Verdict> {
    for (axis, k) in [(0usize, k1), (1usize, k2)] {
        let uses = e.uses_param(axis);
        if !uses {
            continue;
        }
        for &fixed in coarse {
            let arg = |u: f64| if axis == 0 { [u, fixed] } else { [fixed, u] };
            let mut prev = e.eval_unchecked(&arg(ug[0]));
            for w in ug.windows(2) {
                let next = e.eval_unchecked(&arg(w[1]));
                let slope = ((next - prev) / (w[1] - w[0])).abs();
                prev = next;
                if !(slope <= k + slack(k)) {
                    let (n1, n2) = if axis == 0 { ("u1", "u2") } else { ("u2", "u1") };
                    return Some(fail(
                        format!("{item} (argument {})", axis + 1),
                        vec![(n1, w[0]), ("v", w[1]), (n2, fixed)],
                        slope,
                        k,
                    ));
                }
            }
        }
    }
    None
}

fn one_arg_lipschitz(item: String, e: &Expr, k: f64, ug: &[f64]) -> Option<Verdict> {
    let mut prev = e.eval_unchecked(&[ug[0]]);
    for w in ug.windows(2) {
        let next = e.eval_unchecked(&[w[1]]);
        let slope = ((next - prev) / (w[1] - w[0])).abs();
        prev = next;
        if !(slope <= k + slack(k)) {
            return Some(fail(item, vec![("u", w[0]), ("v", w[1])], slope, k));
        }
    }
    None
}

fn h5(spec: &ModelSpec, ug: &[f64], coarse: &[f64]) -> Verdict {
    if spec.c_terms.is_empty() && spec.d_terms.is_empty() {
        return Verdict::NotApplicable;
    }
    for c in &spec.c_terms {
        if let Some(v) = two_arg_lipschitz(format!("{}.h", c.label()), &c.h, c.gamma1, c.gamma2, ug, coarse) {
            return v;
        }
    }
    for d in &spec.d_terms {
        if let Some(v) = two_arg_lipschitz(format!("{}.f", d.label()), &d.f, d.mu1, d.mu2, ug, coarse) {
            return v;
        }
        if d.f.uses_param(0) {
            if let Some(v) = one_arg_lipschitz(format!("{}.g", d.label()), &d.g, d.xi, ug) {
                return v;
            }
        }
        if d.f.uses_param(1) {
            if let Some(v) = one_arg_lipschitz(format!("{}.g_tilde", d.label()), &d.g_tilde, d.xi_tilde, ug) {
                return v;
            }
        }
    }
    Verdict::PassSampled
}

fn h6(spec: &ModelSpec, ug: &[f64], coarse: &[f64]) -> Verdict {
    for (i, n) in spec.neurons.iter().enumerate() {
        let o = &n.outer;
        if let Some(v) = two_arg_lipschitz(format!("F[{}]", i + 1), &o.f, o.zeta, o.sigma, ug, coarse) {
            return v;
        }
    }
    Verdict::PassSampled
}

pub fn validate_hypotheses(spec: &ModelSpec, windows: &Windows) -> HypothesisReport {
    let tg = uniform_grid(0.0, windows.t_max, windows.t_step);
    let ug = uniform_grid(-windows.u_max, windows.u_max, windows.u_step);
    let coarse = uniform_grid(-windows.u_max, windows.u_max, windows.u_max / 10.0);
    let mut entries = vec![
        HypothesisEntry {
            id: "H1",
            verdict: h1(spec, &tg),
            note: None,
        },
        HypothesisEntry {
            id: "H2",
            verdict: h2(spec, &tg, &ug),
            note: None,
        },
        HypothesisEntry {
            id: "H3",
            verdict: h3(spec, &tg, &ug),
            note: None,
        },
        HypothesisEntry {
            id: "H4",
            verdict: h4(spec, &tg),
            note: Some("t - tau(t) -> inf cannot be confirmed on a finite window; sampled necessary condition only".into()),
        },
        HypothesisEntry {
            id: "H5",
            verdict: h5(spec, &ug, &coarse),
            note: None,
        },
        HypothesisEntry {
            id: "H6",
            verdict: h6(spec, &ug, &coarse),
            note: None,
        },
    ];

    let d = match &windows.d {
        Some(d) => Ok(d.clone()),
        None => find_weights(spec, windows.t_max, windows.t_step, windows.tail_fraction).map(|w| w.d),
    };
    let (h7, d, limsup) = match d {
        Ok(d) => {
            let curve = h7_limsup(spec, &d, windows.t_max, windows.t_step, windows.tail_fraction);
            let verdict = match curve
                .limsup
                .iter()
                .enumerate()
                .find(|(_, v)| !(**v < 0.0))
            {
                Some((i, v)) => {
                    let k = curve.grid.len() - 1 - curve.values.iter().rev().position(|row| row[i] == *v).unwrap_or(0);
                    fail(format!("limsup[{}]", i + 1), vec![("t", curve.grid[k])], *v, 0.0)
                }
                None => Verdict::PassSampled,
            };
            (HypothesisEntry { id: "H7", verdict, note: None }, Some(d), Some(curve.limsup))
        }
        Err(e) => (
            HypothesisEntry {
                id: "H7",
                verdict: fail("weights".into(), vec![("t_max", windows.t_max)], radius_of(&e), 1.0),
                note: Some(e.to_string()),
            },
            None,
            None,
        ),
    };
    entries.push(h7);
    HypothesisReport {
        entries,
        d,
        h7_limsup: limsup,
    }
}

fn radius_of(e: &super::h7::WeightError) -> f64 {
    match e {
        super::h7::WeightError::Infeasible { radius } => *radius,
        _ => f64::INFINITY,
    }
}
