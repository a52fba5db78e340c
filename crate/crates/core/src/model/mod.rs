//! Validated domain types for the delayed Cohen–Grossberg system
//!
//! ```text
//! x_i'(t) = a_i(t, x_i) [ -b_i(t, x_i) + F_i(U_i(t, x_t), V_i(t, x_t)) + I_i(t) ]
//! ```
//!
//! where `U_i` sums `c_ijlp(t) h_ijlp(x_j(t - tau_ijp(t)), x_l(t - tau~_ilp(t)))`
//! and `V_i` sums `d_ijlp(t) f_ijlp(int g_ijp(x_j(t+s)) deta_ijp(s), int g~_ilp(x_l(t+s)) deta~_ilp(s))`.
//!
//! Interaction tables are sparse: an absent `(i, j, l, p)` entry means the
//! coefficient is identically zero.

pub mod kernel;

use std::collections::HashSet;

use thiserror::Error;

use crate::config::{
    AmplificationEntry, ConfigDocument, CouplingCEntry, CouplingDEntry, Dimensions, InitialEntry,
    InputEntry, KernelEntry, MixtureComponent, OuterEntry, SelfSignalEntry,
};
use crate::expr::{Expr, ParseError};
use crate::memory::InitialFunction;

pub use kernel::{kernel_mass, kernel_tail_cutoff, KernelMeasure};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{section}: {message}")]
    Schema { section: String, message: String },
    #[error("{section}: cannot parse `{text}`: {source}")]
    Expr {
        section: String,
        text: String,
        source: ParseError,
    },
    #[error("kernel: {0}")]
    Kernel(String),
    #[error("{section}: declared constant `{name}` must be a finite non-negative number, got {value}")]
    NegativeConstant {
        section: String,
        name: String,
        value: f64,
    },
    #[error("{section}: delay is negative at t = {t} (tau = {value})")]
    NegativeDelay { section: String, t: f64, value: f64 },
    #[error("delay expression failed at t = {t}: {message}")]
    DelayEval { t: f64, message: String },
}

fn schema(section: impl Into<String>, message: impl Into<String>) -> ModelError {
    ModelError::Schema {
        section: section.into(),
        message: message.into(),
    }
}

/// Horizon and resolution used when sampling declared delays for negativity.
const DELAY_CHECK_HORIZON: f64 = 100.0;
const DELAY_CHECK_SAMPLES: usize = 10_001;

#[derive(Debug, Clone, PartialEq)]
pub struct DelaySpec {
    /// tau(t), parameter list `[t]`.
    pub tau: Expr,
    /// User claim that t - tau(t) -> +inf.
    pub declared_unbounded_growth: bool,
}

impl DelaySpec {
    pub fn zero() -> Self {
        Self {
            tau: Expr::constant(0.0, &["t"]),
            declared_unbounded_growth: true,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.tau.is_zero()
    }
}

pub fn delay_eval(d: &DelaySpec, t: f64) -> Result<f64, ModelError> {
    let v = d.tau.eval(&[t]).map_err(|e| ModelError::DelayEval {
        t,
        message: e.to_string(),
    })?;
    if v < 0.0 {
        return Err(ModelError::NegativeDelay {
            section: format!("tau = {}", d.tau),
            t,
            value: v,
        });
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Amplification {
    /// a_i(t, u), parameters `[t, u]`.
    pub a: Expr,
    pub a_lo: f64,
    pub a_hi: f64,
    /// A_i(t) of the time-derivative condition, parameters `[t]`.
    pub big_a: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfSignal {
    /// b_i(t, u), parameters `[t, u]`.
    pub b: Expr,
    /// Declared lower slope beta_i(t).
    pub beta: Expr,
    /// Optional declared upper slope beta_i^*(t).
    pub beta_star: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outer {
    /// F_i(u1, u2).
    pub f: Expr,
    pub zeta: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neuron {
    pub amplification: Amplification,
    pub self_signal: SelfSignal,
    pub outer: Outer,
    /// I_i(t).
    pub input: Expr,
}

/// One nonzero entry of the discrete-delay table, 0-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CTerm {
    pub i: usize,
    pub j: usize,
    pub l: usize,
    pub p: usize,
    pub c: Expr,
    pub h: Expr,
    pub gamma1: f64,
    pub gamma2: f64,
    pub tau: DelaySpec,
    pub tau_tilde: DelaySpec,
}

/// One nonzero entry of the distributed-delay table, 0-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DTerm {
    pub i: usize,
    pub j: usize,
    pub l: usize,
    pub p: usize,
    pub d: Expr,
    pub f: Expr,
    pub mu1: f64,
    pub mu2: f64,
    pub g: Expr,
    pub g_tilde: Expr,
    pub xi: f64,
    pub xi_tilde: f64,
    pub kernel: KernelMeasure,
    pub kernel_tilde: KernelMeasure,
}

impl CTerm {
    pub fn label(&self) -> String {
        format!("c[{},{},{},{}]", self.i + 1, self.j + 1, self.l + 1, self.p + 1)
    }
}

impl DTerm {
    pub fn label(&self) -> String {
        format!("d[{},{},{},{}]", self.i + 1, self.j + 1, self.l + 1, self.p + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub n: usize,
    pub p: usize,
    pub neurons: Vec<Neuron>,
    pub c_terms: Vec<CTerm>,
    pub d_terms: Vec<DTerm>,
}

impl ModelSpec {
    /// Largest discrete delay sampled on [0, horizon].
    pub fn max_discrete_delay(&self, horizon: f64, samples: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for term in &self.c_terms {
            for d in [&term.tau, &term.tau_tilde] {
                if d.is_zero() {
                    continue;
                }
                for k in 0..samples {
                    let t = horizon * k as f64 / (samples - 1).max(1) as f64;
                    worst = worst.max(d.tau.eval_unchecked(&[t]));
                }
            }
        }
        worst
    }

    pub fn to_document(&self) -> ConfigDocument {
        let text = |e: &Expr| e.to_string();
        ConfigDocument {
            name: Some(self.name.clone()),
            dimensions: Dimensions { n: self.n, p: self.p },
            amplification: self
                .neurons
                .iter()
                .enumerate()
                .map(|(i, nr)| AmplificationEntry {
                    i: i + 1,
                    expr: text(&nr.amplification.a),
                    a_lo: nr.amplification.a_lo,
                    a_hi: nr.amplification.a_hi,
                    big_a_expr: Some(text(&nr.amplification.big_a)),
                })
                .collect(),
            selfsignal: self
                .neurons
                .iter()
                .enumerate()
                .map(|(i, nr)| SelfSignalEntry {
                    i: i + 1,
                    expr: text(&nr.self_signal.b),
                    beta_expr: text(&nr.self_signal.beta),
                    beta_star_expr: nr.self_signal.beta_star.as_ref().map(text),
                })
                .collect(),
            outer: self
                .neurons
                .iter()
                .enumerate()
                .map(|(i, nr)| OuterEntry {
                    i: i + 1,
                    f_expr: text(&nr.outer.f),
                    zeta: nr.outer.zeta,
                    sigma: nr.outer.sigma,
                })
                .collect(),
            input: self
                .neurons
                .iter()
                .enumerate()
                .map(|(i, nr)| InputEntry {
                    i: i + 1,
                    expr: text(&nr.input),
                })
                .collect(),
            coupling_c: self
                .c_terms
                .iter()
                .map(|c| CouplingCEntry {
                    i: c.i + 1,
                    j: c.j + 1,
                    l: c.l + 1,
                    p: c.p + 1,
                    c_expr: text(&c.c),
                    h_expr: text(&c.h),
                    gamma1: c.gamma1,
                    gamma2: c.gamma2,
                    tau_expr: text(&c.tau.tau),
                    tau_tilde_expr: text(&c.tau_tilde.tau),
                    tau_unbounded_growth: c.tau.declared_unbounded_growth
                        && c.tau_tilde.declared_unbounded_growth,
                })
                .collect(),
            coupling_d: self
                .d_terms
                .iter()
                .map(|d| CouplingDEntry {
                    i: d.i + 1,
                    j: d.j + 1,
                    l: d.l + 1,
                    p: d.p + 1,
                    d_expr: text(&d.d),
                    f_expr: text(&d.f),
                    mu1: d.mu1,
                    mu2: d.mu2,
                    g_expr: text(&d.g),
                    g_tilde_expr: text(&d.g_tilde),
                    xi: d.xi,
                    xi_tilde: d.xi_tilde,
                    kernel: kernel_entry(&d.kernel),
                    kernel_tilde: kernel_entry(&d.kernel_tilde),
                })
                .collect(),
            initial: Vec::new(),
        }
    }
}

fn kernel_entry(k: &KernelMeasure) -> KernelEntry {
    match k {
        KernelMeasure::Exponential { rate } => KernelEntry::Exponential { rate: *rate },
        KernelMeasure::Gamma { shape, rate } => KernelEntry::Gamma {
            shape: *shape,
            rate: *rate,
        },
        KernelMeasure::Atom { lag } => KernelEntry::Atom { lag: *lag },
        KernelMeasure::Density { expr, support } => KernelEntry::Density {
            expr: expr.to_string(),
            support: *support,
        },
        KernelMeasure::Mixture(parts) => KernelEntry::Mixture {
            components: parts
                .iter()
                .map(|(w, k)| MixtureComponent {
                    weight: *w,
                    kernel: kernel_entry(k),
                })
                .collect(),
        },
    }
}

fn parse_in(section: &str, text: &str, params: &[&str]) -> Result<Expr, ModelError> {
    Expr::parse(text, params).map_err(|source| ModelError::Expr {
        section: section.to_string(),
        text: text.to_string(),
        source,
    })
}

fn constant(section: &str, name: &str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(ModelError::NegativeConstant {
            section: section.to_string(),
            name: name.to_string(),
            value,
        })
    }
}

fn index(section: &str, name: &str, value: usize, upper: usize) -> Result<usize, ModelError> {
    if (1..=upper).contains(&value) {
        Ok(value - 1)
    } else {
        Err(schema(section, format!("index {name} = {value} outside 1..={upper}")))
    }
}

fn build_kernel(section: &str, entry: &KernelEntry) -> Result<KernelMeasure, ModelError> {
    let k = match entry {
        KernelEntry::Exponential { rate } => KernelMeasure::Exponential { rate: *rate },
        KernelEntry::Gamma { shape, rate } => KernelMeasure::Gamma {
            shape: *shape,
            rate: *rate,
        },
        KernelEntry::Atom { lag } => KernelMeasure::Atom { lag: *lag },
        KernelEntry::Density { expr, support } => KernelMeasure::Density {
            expr: parse_in(section, expr, &["u"])?,
            support: *support,
        },
        KernelEntry::Mixture { components } => KernelMeasure::Mixture(
            components
                .iter()
                .map(|c| Ok((c.weight, build_kernel(section, &c.kernel)?)))
                .collect::<Result<_, ModelError>>()?,
        ),
    };
    k.validate().map_err(|e| match e {
        ModelError::Kernel(msg) => schema(section, msg),
        other => other,
    })?;
    Ok(k)
}

fn build_delay(section: &str, text: &str, growth: bool) -> Result<DelaySpec, ModelError> {
    let d = DelaySpec {
        tau: parse_in(section, text, &["t"])?,
        declared_unbounded_growth: growth,
    };
    if !d.is_zero() {
        for k in 0..DELAY_CHECK_SAMPLES {
            let t = DELAY_CHECK_HORIZON * k as f64 / (DELAY_CHECK_SAMPLES - 1) as f64;
            delay_eval(&d, t).map_err(|e| match e {
                ModelError::NegativeDelay { t, value, .. } => ModelError::NegativeDelay {
                    section: section.to_string(),
                    t,
                    value,
                },
                other => other,
            })?;
        }
    }
    Ok(d)
}

/// Slot lookup for per-neuron sections: each `i` must appear exactly once.
fn per_neuron<'a, T>(
    section: &str,
    entries: &'a [T],
    n: usize,
    key: impl Fn(&T) -> usize,
    required: bool,
) -> Result<Vec<Option<&'a T>>, ModelError> {
    let mut slots: Vec<Option<&T>> = vec![None; n];
    for (k, e) in entries.iter().enumerate() {
        let i = index(&format!("{section}[{k}]"), "i", key(e), n)?;
        if slots[i].is_some() {
            return Err(schema(format!("{section}[{k}]"), format!("duplicate entry for i = {}", i + 1)));
        }
        slots[i] = Some(e);
    }
    if required {
        if let Some(i) = slots.iter().position(Option::is_none) {
            return Err(schema(section, format!("missing entry for i = {}", i + 1)));
        }
    }
    Ok(slots)
}

/// Builds and eagerly validates a model from a config document.
///
/// Structural invariants are enforced here (indices, parse lists, kernel
/// normalization, non-negative constants and delays, 0 < a_lo <= a_hi).
/// The analytic hypotheses are sampled separately by the criteria module so
/// that a document declaring a wrong constant still loads and can be
/// diagnosed.
pub fn build_model(doc: &ConfigDocument) -> Result<ModelSpec, ModelError> {
    let Dimensions { n, p } = doc.dimensions;
    if n == 0 {
        return Err(schema("dimensions", "n must be >= 1"));
    }
    if p == 0 {
        return Err(schema("dimensions", "P must be >= 1"));
    }

    let amps = per_neuron("amplification", &doc.amplification, n, |e| e.i, true)?;
    let selfs = per_neuron("selfsignal", &doc.selfsignal, n, |e| e.i, true)?;
    let outers = per_neuron("outer", &doc.outer, n, |e| e.i, true)?;
    let inputs = per_neuron("input", &doc.input, n, |e| e.i, false)?;

    let mut neurons = Vec::with_capacity(n);
    for i in 0..n {
        let amp = amps[i].expect("required");
        let sec = format!("amplification[i={}]", i + 1);
        let a_lo = constant(&sec, "a_lo", amp.a_lo)?;
        let a_hi = constant(&sec, "a_hi", amp.a_hi)?;
        if !(a_lo > 0.0) {
            return Err(schema(&sec, format!("a_lo must be > 0, got {a_lo}")));
        }
        if a_hi < a_lo {
            return Err(schema(&sec, format!("a_hi = {a_hi} < a_lo = {a_lo}")));
        }
        let amplification = Amplification {
            a: parse_in(&sec, &amp.expr, &["t", "u"])?,
            a_lo,
            a_hi,
            big_a: parse_in(&sec, amp.big_a_expr.as_deref().unwrap_or("0"), &["t"])?,
        };

        let ss = selfs[i].expect("required");
        let sec = format!("selfsignal[i={}]", i + 1);
        let self_signal = SelfSignal {
            b: parse_in(&sec, &ss.expr, &["t", "u"])?,
            beta: parse_in(&sec, &ss.beta_expr, &["t"])?,
            beta_star: ss
                .beta_star_expr
                .as_deref()
                .map(|t| parse_in(&sec, t, &["t"]))
                .transpose()?,
        };

        let o = outers[i].expect("required");
        let sec = format!("outer[i={}]", i + 1);
        let outer = Outer {
            f: parse_in(&sec, &o.f_expr, &["u1", "u2"])?,
            zeta: constant(&sec, "zeta", o.zeta)?,
            sigma: constant(&sec, "sigma", o.sigma)?,
        };

        let input = match inputs[i] {
            Some(e) => parse_in(&format!("input[i={}]", i + 1), &e.expr, &["t"])?,
            None => Expr::constant(0.0, &["t"]),
        };
        neurons.push(Neuron {
            amplification,
            self_signal,
            outer,
            input,
        });
    }

    let mut seen = HashSet::new();
    let mut c_terms = Vec::with_capacity(doc.coupling_c.len());
    for (k, e) in doc.coupling_c.iter().enumerate() {
        let sec = format!("coupling_c[{k}]");
        let key = (
            index(&sec, "i", e.i, n)?,
            index(&sec, "j", e.j, n)?,
            index(&sec, "l", e.l, n)?,
            index(&sec, "p", e.p, p)?,
        );
        if !seen.insert(key) {
            return Err(schema(&sec, "duplicate (i, j, l, p) entry"));
        }
        c_terms.push(CTerm {
            i: key.0,
            j: key.1,
            l: key.2,
            p: key.3,
            c: parse_in(&sec, &e.c_expr, &["t"])?,
            h: parse_in(&sec, &e.h_expr, &["u1", "u2"])?,
            gamma1: constant(&sec, "gamma1", e.gamma1)?,
            gamma2: constant(&sec, "gamma2", e.gamma2)?,
            tau: build_delay(&format!("{sec}.tau"), &e.tau_expr, e.tau_unbounded_growth)?,
            tau_tilde: build_delay(
                &format!("{sec}.tau_tilde"),
                &e.tau_tilde_expr,
                e.tau_unbounded_growth,
            )?,
        });
    }

    let mut seen = HashSet::new();
    let mut d_terms = Vec::with_capacity(doc.coupling_d.len());
    for (k, e) in doc.coupling_d.iter().enumerate() {
        let sec = format!("coupling_d[{k}]");
        let key = (
            index(&sec, "i", e.i, n)?,
            index(&sec, "j", e.j, n)?,
            index(&sec, "l", e.l, n)?,
            index(&sec, "p", e.p, p)?,
        );
        if !seen.insert(key) {
            return Err(schema(&sec, "duplicate (i, j, l, p) entry"));
        }
        d_terms.push(DTerm {
            i: key.0,
            j: key.1,
            l: key.2,
            p: key.3,
            d: parse_in(&sec, &e.d_expr, &["t"])?,
            f: parse_in(&sec, &e.f_expr, &["u1", "u2"])?,
            mu1: constant(&sec, "mu1", e.mu1)?,
            mu2: constant(&sec, "mu2", e.mu2)?,
            g: parse_in(&sec, &e.g_expr, &["u"])?,
            g_tilde: parse_in(&sec, &e.g_tilde_expr, &["u"])?,
            xi: constant(&sec, "xi", e.xi)?,
            xi_tilde: constant(&sec, "xi_tilde", e.xi_tilde)?,
            kernel: build_kernel(&format!("{sec}.kernel"), &e.kernel)?,
            kernel_tilde: build_kernel(&format!("{sec}.kernel_tilde"), &e.kernel_tilde)?,
        });
    }

    Ok(ModelSpec {
        name: doc.name.clone().unwrap_or_else(|| "model".to_string()),
        n,
        p,
        neurons,
        c_terms,
        d_terms,
    })
}

/// Initial functions declared in the document, keyed by their 1-based `k`.
pub fn initial_conditions(doc: &ConfigDocument) -> Result<Vec<(usize, InitialFunction)>, ModelError> {
    let n = doc.dimensions.n;
    let mut out: Vec<(usize, InitialFunction)> = Vec::new();
    for InitialEntry { k, phi, bound } in &doc.initial {
        let sec = format!("initial[k={k}]");
        if out.iter().any(|(kk, _)| kk == k) {
            return Err(schema(&sec, "duplicate initial condition"));
        }
        if phi.len() != n {
            return Err(schema(&sec, format!("expected {n} components, got {}", phi.len())));
        }
        let components = phi
            .iter()
            .map(|text| parse_in(&sec, text, &["s"]))
            .collect::<Result<Vec<_>, _>>()?;
        out.push((
            *k,
            InitialFunction {
                components,
                bound: constant(&sec, "bound", *bound)?,
            },
        ));
    }
    Ok(out)
}

/// A system together with an asymptotic partner.
///
/// The partner may change only b, beta, the c and d coefficients, the
/// discrete delays and the inputs; everything else must be shared.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticPair {
    pub base: ModelSpec,
    pub partner: ModelSpec,
}

impl AsymptoticPair {
    pub fn new(base: ModelSpec, partner: ModelSpec) -> Result<Self, ModelError> {
        let mismatch = |what: String| schema("asymptotic pair", format!("{what} differs between base and partner"));
        if base.n != partner.n || base.p != partner.p {
            return Err(mismatch(format!(
                "dimensions (n, P) = ({}, {}) vs ({}, {})",
                base.n, base.p, partner.n, partner.p
            )));
        }
        for (i, (a, b)) in base.neurons.iter().zip(&partner.neurons).enumerate() {
            if a.amplification != b.amplification {
                return Err(mismatch(format!("amplification of neuron {}", i + 1)));
            }
            if a.outer != b.outer {
                return Err(mismatch(format!("outer function of neuron {}", i + 1)));
            }
        }
        for c in &base.c_terms {
            if let Some(pc) = partner.c_terms.iter().find(|o| same_index(c, o)) {
                if c.h != pc.h || c.gamma1 != pc.gamma1 || c.gamma2 != pc.gamma2 {
                    return Err(mismatch(format!("activation h of {}", c.label())));
                }
            }
        }
        for d in &base.d_terms {
            if let Some(pd) = partner
                .d_terms
                .iter()
                .find(|o| (o.i, o.j, o.l, o.p) == (d.i, d.j, d.l, d.p))
            {
                if d.f != pd.f
                    || d.g != pd.g
                    || d.g_tilde != pd.g_tilde
                    || d.kernel != pd.kernel
                    || d.kernel_tilde != pd.kernel_tilde
                {
                    return Err(mismatch(format!("activations or kernels of {}", d.label())));
                }
            }
        }
        Ok(Self { base, partner })
    }
}

fn same_index(a: &CTerm, b: &CTerm) -> bool {
    (a.i, a.j, a.l, a.p) == (b.i, b.j, b.l, b.p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_doc() -> ConfigDocument {
        ConfigDocument::from_toml(
            r#"
            [dimensions]
            n = 1
            P = 1
            [[amplification]]
            i = 1
            expr = "1"
            a_lo = 1
            a_hi = 1
            [[selfsignal]]
            i = 1
            expr = "u"
            beta_expr = "1"
            [[outer]]
            i = 1
            F_expr = "u1+u2"
            zeta = 1
            sigma = 1
            "#,
        )
        .unwrap()
    }

    #[test]
    fn empty_tables_give_decoupled_scalar_model() {
        let spec = build_model(&scalar_doc()).unwrap();
        assert_eq!(spec.n, 1);
        assert!(spec.c_terms.is_empty() && spec.d_terms.is_empty());
        assert!(spec.neurons[0].input.is_zero());
    }

    #[test]
    fn kernel_with_mass_two_is_rejected() {
        let mut doc = scalar_doc();
        doc.coupling_d.push(CouplingDEntry {
            i: 1,
            j: 1,
            l: 1,
            p: 1,
            d_expr: "1".into(),
            f_expr: "u1".into(),
            mu1: 1.0,
            mu2: 0.0,
            g_expr: "u".into(),
            g_tilde_expr: "u".into(),
            xi: 1.0,
            xi_tilde: 1.0,
            kernel: KernelEntry::Density {
                expr: "2*exp(-u)".into(),
                support: 40.0,
            },
            kernel_tilde: KernelEntry::Exponential { rate: 1.0 },
        });
        let err = build_model(&doc).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("coupling_d[0].kernel") && msg.contains("mass 2"), "{msg}");
    }

    #[test]
    fn schema_violations() {
        let mut doc = scalar_doc();
        doc.outer[0].zeta = -1.0;
        assert!(matches!(build_model(&doc), Err(ModelError::NegativeConstant { .. })));

        let mut doc = scalar_doc();
        doc.amplification[0].a_lo = 0.0;
        assert!(matches!(build_model(&doc), Err(ModelError::Schema { .. })));

        let mut doc = scalar_doc();
        doc.selfsignal.clear();
        assert!(build_model(&doc).unwrap_err().to_string().contains("missing entry"));

        let mut doc = scalar_doc();
        doc.selfsignal[0].expr = "u +".into();
        assert!(matches!(build_model(&doc), Err(ModelError::Expr { .. })));

        let mut doc = scalar_doc();
        doc.coupling_c.push(CouplingCEntry {
            i: 1,
            j: 2,
            l: 1,
            p: 1,
            c_expr: "1".into(),
            h_expr: "u1".into(),
            gamma1: 1.0,
            gamma2: 0.0,
            tau_expr: "0".into(),
            tau_tilde_expr: "0".into(),
            tau_unbounded_growth: true,
        });
        assert!(build_model(&doc).unwrap_err().to_string().contains("outside"));
    }

    #[test]
    fn negative_delay_is_rejected() {
        let mut doc = scalar_doc();
        doc.coupling_c.push(CouplingCEntry {
            i: 1,
            j: 1,
            l: 1,
            p: 1,
            c_expr: "1".into(),
            h_expr: "u1".into(),
            gamma1: 1.0,
            gamma2: 0.0,
            tau_expr: "sin(t)".into(),
            tau_tilde_expr: "0".into(),
            tau_unbounded_growth: true,
        });
        let err = build_model(&doc).unwrap_err();
        assert!(matches!(err, ModelError::NegativeDelay { .. }), "{err}");
    }

    #[test]
    fn delay_eval_examples() {
        let d = DelaySpec {
            tau: Expr::parse("abs(sin(t))", &["t"]).unwrap(),
            declared_unbounded_growth: true,
        };
        assert!((delay_eval(&d, std::f64::consts::FRAC_PI_2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(delay_eval(&DelaySpec::zero(), 12.0).unwrap(), 0.0);
        let grow = DelaySpec {
            tau: Expr::parse("t+1", &["t"]).unwrap(),
            declared_unbounded_growth: true,
        };
        // valid as a delay; t - tau(t) = -1 is caught by the H4 check
        assert_eq!(delay_eval(&grow, 3.0).unwrap(), 4.0);
    }

    #[test]
    fn build_is_deterministic_and_round_trips() {
        let spec = build_model(&scalar_doc()).unwrap();
        assert_eq!(build_model(&scalar_doc()).unwrap(), spec);
        let doc = spec.to_document();
        let text = doc.to_toml().unwrap();
        let again = build_model(&ConfigDocument::from_toml(&text).unwrap()).unwrap();
        assert_eq!(again.neurons, spec.neurons);
    }

    #[test]
    fn initial_conditions_parse() {
        let mut doc = scalar_doc();
        doc.initial.push(InitialEntry {
            k: 1,
            phi: vec!["exp(s)".into()],
            bound: 1.0,
        });
        let ics = initial_conditions(&doc).unwrap();
        assert_eq!(ics[0].0, 1);
        doc.initial[0].phi.push("0".into());
        assert!(initial_conditions(&doc).is_err());
    }

    #[test]
    fn pair_structure_is_checked() {
        let base = build_model(&scalar_doc()).unwrap();
        assert!(AsymptoticPair::new(base.clone(), base.clone()).is_ok());
        let mut other = scalar_doc();
        other.amplification[0].expr = "2".into();
        other.amplification[0].a_hi = 2.0;
        let partner = build_model(&other).unwrap();
        assert!(AsymptoticPair::new(base.clone(), partner).is_err());
        let mut wide = scalar_doc();
        wide.dimensions.n = 2;
        for section in [&mut wide.amplification] {
            let mut e = section[0].clone();
            e.i = 2;
            section.push(e);
        }
        let mut s = wide.selfsignal[0].clone();
        s.i = 2;
        wide.selfsignal.push(s);
        let mut o = wide.outer[0].clone();
        o.i = 2;
        wide.outer.push(o);
        assert!(AsymptoticPair::new(base, build_model(&wide).unwrap()).is_err());
    }
}
