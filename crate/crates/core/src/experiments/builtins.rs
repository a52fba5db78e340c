//! Built-in model families as configuration documents.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::config::{
    AmplificationEntry, ConfigDocument, CouplingCEntry, CouplingDEntry, Dimensions, InitialEntry, InputEntry,
    KernelEntry, OuterEntry, SelfSignalEntry,
};
use crate::criteria::{find_weights, WeightError};
use crate::model::{build_model, AsymptoticPair, ModelError, ModelSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuiltinError {
    #[error("unknown builtin `{0}`")]
    Unknown(String),
    #[error("parameters rejected: {0}")]
    Rejected(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinName {
    Example5,
    Example5Asymptotic,
    StaticKernel,
    HighorderPeriodic,
    LoworderAlmostperiodic,
}

impl BuiltinName {
    pub const ALL: [BuiltinName; 5] = [
        BuiltinName::Example5,
        BuiltinName::Example5Asymptotic,
        BuiltinName::StaticKernel,
        BuiltinName::HighorderPeriodic,
        BuiltinName::LoworderAlmostperiodic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BuiltinName::Example5 => "example5",
            BuiltinName::Example5Asymptotic => "example5_asymptotic",
            BuiltinName::StaticKernel => "static_kernel",
            BuiltinName::HighorderPeriodic => "highorder_periodic",
            BuiltinName::LoworderAlmostperiodic => "loworder_almostperiodic",
        }
    }

    /// Document with default parameters.
    pub fn document(self) -> ConfigDocument {
        match self {
            BuiltinName::Example5 => example5(),
            BuiltinName::Example5Asymptotic => example5_asymptotic(),
            BuiltinName::StaticKernel => static_kernel(&StaticKernelParams::default()).expect("defaults are admissible"),
            BuiltinName::HighorderPeriodic => {
                highorder_periodic(&HighOrderParams::default()).expect("defaults are admissible")
            }
            BuiltinName::LoworderAlmostperiodic => {
                loworder_almostperiodic(&LowOrderParams::default()).expect("defaults are admissible")
            }
        }
    }

    pub fn spec(self) -> ModelSpec {
        build_model(&self.document()).expect("builtin documents are valid")
    }
}

impl fmt::Display for BuiltinName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BuiltinName {
    type Err = BuiltinError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BuiltinName::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| BuiltinError::Unknown(s.to_string()))
    }
}

fn amp(i: usize, expr: &str, a_lo: f64, a_hi: f64) -> AmplificationEntry {
    AmplificationEntry {
        i,
        expr: expr.into(),
        a_lo,
        a_hi,
        big_a_expr: Some("0".into()),
    }
}

fn selfsig(i: usize, expr: &str, beta: &str, beta_star: Option<&str>) -> SelfSignalEntry {
    SelfSignalEntry {
        i,
        expr: expr.into(),
        beta_expr: beta.into(),
        beta_star_expr: beta_star.map(Into::into),
    }
}

fn outer(i: usize, f: &str, zeta: f64, sigma: f64) -> OuterEntry {
    OuterEntry {
        i,
        f_expr: f.into(),
        zeta,
        sigma,
    }
}

fn input(i: usize, expr: &str) -> InputEntry {
    InputEntry { i, expr: expr.into() }
}

#[allow(clippy::too_many_arguments)]
fn c_term(i: usize, j: usize, l: usize, p: usize, c: &str, h: &str, gamma1: f64, gamma2: f64, tau: &str) -> CouplingCEntry {
    CouplingCEntry {
        i,
        j,
        l,
        p,
        c_expr: c.into(),
        h_expr: h.into(),
        gamma1,
        gamma2,
        tau_expr: tau.into(),
        tau_tilde_expr: "0".into(),
        tau_unbounded_growth: true,
    }
}

struct DArgs<'a> {
    d: &'a str,
    f: &'a str,
    mu1: f64,
    mu2: f64,
    g: &'a str,
    xi: f64,
    kernel: KernelEntry,
}

fn d_term(i: usize, j: usize, l: usize, p: usize, a: DArgs<'_>) -> CouplingDEntry {
    CouplingDEntry {
        i,
        j,
        l,
        p,
        d_expr: a.d.into(),
        f_expr: a.f.into(),
        mu1: a.mu1,
        mu2: a.mu2,
        g_expr: a.g.into(),
        g_tilde_expr: a.g.into(),
        xi: a.xi,
        xi_tilde: a.xi,
        kernel: a.kernel.clone(),
        kernel_tilde: a.kernel,
    }
}

fn initial(k: usize, phi: &[&str], bound: f64) -> InitialEntry {
    InitialEntry {
        k,
        phi: phi.iter().map(|s| s.to_string()).collect(),
        bound,
    }
}

/// The three initial functions of the two-neuron demonstration.
pub fn figure_initial_conditions() -> Vec<InitialEntry> {
    vec![
        initial(1, &["-exp(s)/2", "cos(s)/2"], 1.0),
        initial(2, &["cos(s)/2", "-exp(s)/2"], 1.0),
        initial(3, &["sin(s)", "exp(s)-1"], 1.0),
    ]
}

/// Lower bound on the slope of u exp(sin u / (1 + u^2)); the sampled
/// minimum is about 0.5458.
pub const EXAMPLE5_SLOPE_FLOOR: f64 = 0.54;

fn example5_doc(name: &str, transient: bool) -> ConfigDocument {
    let tr = |body: &str, extra: &str| {
        if transient {
            format!("{body}{extra}")
        } else {
            body.to_string()
        }
    };
    let beta1 = if transient {
        format!("{EXAMPLE5_SLOPE_FLOOR}*(4+exp(-t))")
    } else {
        format!("{EXAMPLE5_SLOPE_FLOOR}*4")
    };
    let b1 = if transient {
        "(4+exp(-t))*u*exp(sin(u)/(1+u^2))"
    } else {
        "4*u*exp(sin(u)/(1+u^2))"
    };
    ConfigDocument {
        name: Some(name.into()),
        dimensions: Dimensions { n: 2, p: 1 },
        amplification: vec![amp(1, "sin(u)+2", 1.0, 3.0), amp(2, "cos(u)+2", 1.0, 3.0)],
        selfsignal: vec![
            selfsig(1, b1, &beta1, None),
            selfsig(
                2,
                &format!("({})*u", tr("5+cos(t)", "+exp(-t)")),
                &tr("5+cos(t)", "+exp(-t)"),
                None,
            ),
        ],
        outer: vec![outer(1, "u1", 1.0, 0.0), outer(2, "u1", 1.0, 0.0)],
        input: vec![
            input(1, &tr("exp(sin(t))", "+exp(-t)")),
            input(2, &tr("cos(t)", "+exp(-t)")),
        ],
        coupling_c: vec![
            c_term(1, 2, 1, 1, &tr("cos(t)/3", "+exp(-t)"), "tanh(u1)", 1.0, 0.0, "abs(sin(t))"),
            c_term(2, 1, 1, 1, &tr("2*sin(t)/3", "+exp(-t)"), "tanh(u1)", 1.0, 0.0, "abs(cos(t))"),
        ],
        coupling_d: Vec::new(),
        initial: figure_initial_conditions(),
    }
}

/// Two-neuron non-periodic system with vanishing e^{-t} perturbations.
pub fn example5() -> ConfigDocument {
    example5_doc("example5", true)
}

/// The 2π-periodic partner of [`example5`]: every e^{-t} term removed.
pub fn example5_asymptotic() -> ConfigDocument {
    example5_doc("example5_asymptotic", false)
}

pub fn example5_pair() -> AsymptoticPair {
    AsymptoticPair::new(
        build_model(&example5()).expect("valid"),
        build_model(&example5_asymptotic()).expect("valid"),
    )
    .expect("shared structure")
}

/// Checks the criterion on one period with the weight search.
fn admissible_on_period(doc: &ConfigDocument, period: f64) -> Result<(), BuiltinError> {
    let spec = build_model(doc)?;
    match find_weights(&spec, period, period / 1000.0, 1.0) {
        Ok(_) => Ok(()),
        Err(WeightError::Infeasible { radius }) => Err(BuiltinError::Rejected(format!(
            "no weights d > 0 satisfy the periodic criterion on [0, {period}] (spectral radius {radius})"
        ))),
        Err(e) => Err(BuiltinError::Rejected(e.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticKernelParams {
    /// Coupling amplitude: c12 = A cos t, c21 = A sin t.
    pub amplitude: f64,
    /// Rate of the exponential memory kernels.
    pub rate: f64,
}

impl Default for StaticKernelParams {
    fn default() -> Self {
        Self {
            amplitude: 0.4,
            rate: 1.0,
        }
    }
}

/// Low-order static network x_i' = a_i(x_i)[-b_i(t, x_i) + tanh(sum_j c_ij(t) int x_j dK)].
///
/// a_i in [1, 2], unit self-signal slope; refused when no weights satisfy
/// the periodic existence inequality.
pub fn static_kernel(p: &StaticKernelParams) -> Result<ConfigDocument, BuiltinError> {
    if !(p.amplitude >= 0.0 && p.rate > 0.0) {
        return Err(BuiltinError::Rejected("need amplitude >= 0 and rate > 0".into()));
    }
    let kernel = KernelEntry::Exponential { rate: p.rate };
    let term = |i: usize, j: usize, d: String| {
        d_term(
            i,
            j,
            j,
            1,
            DArgs {
                d: &d,
                f: "u1",
                mu1: 1.0,
                mu2: 0.0,
                g: "u",
                xi: 1.0,
                kernel: kernel.clone(),
            },
        )
    };
    let doc = ConfigDocument {
        name: Some("static_kernel".into()),
        dimensions: Dimensions { n: 2, p: 1 },
        amplification: vec![amp(1, "1.5+0.5*cos(u)", 1.0, 2.0), amp(2, "1.5+0.5*cos(u)", 1.0, 2.0)],
        selfsignal: vec![
            selfsig(1, "u-sin(t)", "1", Some("1")),
            selfsig(2, "u-cos(t)", "1", Some("1")),
        ],
        outer: vec![outer(1, "tanh(u2)", 0.0, 1.0), outer(2, "tanh(u2)", 0.0, 1.0)],
        input: Vec::new(),
        coupling_c: Vec::new(),
        coupling_d: vec![
            term(1, 2, format!("{}*cos(t)", p.amplitude)),
            term(2, 1, format!("{}*sin(t)", p.amplitude)),
        ],
        initial: vec![
            initial(1, &["sin(s)", "cos(s)"], 1.0),
            initial(2, &["-exp(s)", "1/2"], 1.0),
        ],
    };
    admissible_on_period(&doc, 2.0 * std::f64::consts::PI)?;
    Ok(doc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HighOrderParams {
    /// Input scalings rho_j inside f_j(rho_j u) = tanh(rho_j u).
    pub rho: [f64; 2],
    /// Overall coupling scale.
    pub coupling: f64,
}

impl Default for HighOrderParams {
    fn default() -> Self {
        Self {
            rho: [1.0, 1.0],
            coupling: 0.2,
        }
    }
}

/// Two-neuron high-order network with products f_j f_l of distributed
/// averages, 2π-periodic coefficients and gamma(2, 2) kernels.
pub fn highorder_periodic(p: &HighOrderParams) -> Result<ConfigDocument, BuiltinError> {
    let [r1, r2] = p.rho;
    if !(r1 > 0.0 && r2 > 0.0 && p.coupling >= 0.0) {
        return Err(BuiltinError::Rejected("need rho > 0 and coupling >= 0".into()));
    }
    let k = p.coupling;
    let kernel = KernelEntry::Gamma { shape: 2.0, rate: 2.0 };
    let rho = [r1, r2];
    let single = |i: usize, j: usize, d: String| {
        let f = format!("tanh({}*u1)", rho[j - 1]);
        d_term(
            i,
            j,
            1,
            1,
            DArgs {
                d: &d,
                f: &f,
                mu1: rho[j - 1],
                mu2: 0.0,
                g: "u",
                xi: 1.0,
                kernel: kernel.clone(),
            },
        )
    };
    // |f_j(rho_j u1) f_l(rho_l u2)| has Lipschitz constants M_l rho_j mu_j and M_j rho_l mu_l, M = mu = 1
    let product = |i: usize, j: usize, l: usize, d: String| {
        let f = format!("tanh({}*u1)*tanh({}*u2)", rho[j - 1], rho[l - 1]);
        d_term(
            i,
            j,
            l,
            2,
            DArgs {
                d: &d,
                f: &f,
                mu1: rho[j - 1],
                mu2: rho[l - 1],
                g: "u",
                xi: 1.0,
                kernel: kernel.clone(),
            },
        )
    };
    let doc = ConfigDocument {
        name: Some("highorder_periodic".into()),
        dimensions: Dimensions { n: 2, p: 2 },
        amplification: vec![amp(1, "1.5+0.5*tanh(u)", 1.0, 2.0), amp(2, "1.5+0.5*tanh(u)", 1.0, 2.0)],
        selfsignal: vec![
            selfsig(1, "3*u+sin(u)", "2", Some("4")),
            selfsig(2, "3*u+sin(u)", "2", Some("4")),
        ],
        outer: vec![outer(1, "u1+u2", 1.0, 1.0), outer(2, "u1+u2", 1.0, 1.0)],
        input: vec![input(1, "sin(t)"), input(2, "cos(t)")],
        coupling_c: vec![
            c_term(1, 2, 1, 1, &format!("{k}*cos(t)"), &format!("tanh({r2}*u1)"), r2, 0.0, "0"),
            c_term(2, 1, 1, 1, &format!("{k}*sin(t)"), &format!("tanh({r1}*u1)"), r1, 0.0, "0"),
        ],
        coupling_d: vec![
            single(1, 2, format!("{}*sin(t)", k / 2.0)),
            single(2, 1, format!("{}*cos(t)", k / 2.0)),
            product(1, 1, 2, format!("{}*cos(t)", k / 4.0)),
            product(2, 2, 1, format!("{}*sin(t)", k / 4.0)),
        ],
        initial: vec![
            initial(1, &["sin(s)", "cos(s)"], 1.0),
            initial(2, &["-1", "exp(s)"], 1.0),
        ],
    };
    admissible_on_period(&doc, 2.0 * std::f64::consts::PI)?;
    Ok(doc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowOrderParams {
    pub coupling: f64,
    /// Include the vanishing e^{-t} perturbations.
    pub transient: bool,
}

impl Default for LowOrderParams {
    fn default() -> Self {
        Self {
            coupling: 0.2,
            transient: true,
        }
    }
}

/// Low-order network with instantaneous, discretely delayed and distributed
/// couplings whose coefficients are almost periodic (frequencies 1 and √2)
/// plus optional vanishing perturbations.
pub fn loworder_almostperiodic(p: &LowOrderParams) -> Result<ConfigDocument, BuiltinError> {
    if !(p.coupling >= 0.0) {
        return Err(BuiltinError::Rejected("need coupling >= 0".into()));
    }
    let half = p.coupling / 2.0;
    let ap = |a: &str, b: &str, extra: &str| {
        let body = format!("{half}*({a}(t)+{b}(2^0.5*t))");
        if p.transient {
            format!("{body}+{extra}")
        } else {
            body
        }
    };
    let kernel = KernelEntry::Exponential { rate: 1.0 };
    let distributed = |i: usize, j: usize, d: String| {
        d_term(
            i,
            j,
            j,
            1,
            DArgs {
                d: &d,
                f: "u1",
                mu1: 1.0,
                mu2: 0.0,
                g: "tanh(u)",
                xi: 1.0,
                kernel: kernel.clone(),
            },
        )
    };
    let doc = ConfigDocument {
        name: Some("loworder_almostperiodic".into()),
        dimensions: Dimensions { n: 2, p: 2 },
        amplification: vec![amp(1, "2+0.5*cos(u)", 1.5, 2.5), amp(2, "2+0.5*cos(u)", 1.5, 2.5)],
        selfsignal: vec![selfsig(1, "4*u", "4", Some("4")), selfsig(2, "4*u", "4", Some("4"))],
        outer: vec![outer(1, "u1+u2", 1.0, 1.0), outer(2, "u1+u2", 1.0, 1.0)],
        input: vec![
            input(1, &ap("sin", "sin", "exp(-t)")),
            input(2, &ap("cos", "cos", "exp(-t)")),
        ],
        coupling_c: vec![
            c_term(1, 2, 2, 1, &ap("sin", "sin", "exp(-t)"), "tanh(u1)", 1.0, 0.0, "0"),
            c_term(2, 1, 1, 1, &ap("cos", "cos", "exp(-t)"), "tanh(u1)", 1.0, 0.0, "0"),
            c_term(1, 2, 2, 2, &ap("cos", "sin", "exp(-2*t)"), "tanh(u1)", 1.0, 0.0, "1+0.5*sin(2^0.5*t)"),
            c_term(2, 1, 1, 2, &ap("sin", "cos", "exp(-2*t)"), "tanh(u1)", 1.0, 0.0, "1+0.5*cos(t)"),
        ],
        coupling_d: vec![
            distributed(1, 2, ap("sin", "sin", "exp(-t)")),
            distributed(2, 1, ap("cos", "cos", "exp(-t)")),
        ],
        initial: vec![
            initial(1, &["sin(s)", "cos(s)"], 1.0),
            initial(2, &["-exp(s)", "1/2"], 1.0),
        ],
    };
    let spec = build_model(&doc)?;
    // the limit system must satisfy the criterion with sup-norm coefficients
    find_weights(&spec, 200.0, 0.01, 0.5).map_err(|e| BuiltinError::Rejected(e.to_string()))?;
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::h7_value;

    #[test]
    fn names_round_trip() {
        for b in BuiltinName::ALL {
            assert_eq!(b.as_str().parse::<BuiltinName>().unwrap(), b);
            let spec = b.spec();
            assert_eq!(spec.name, b.as_str());
        }
        assert!("example6".parse::<BuiltinName>().is_err());
    }

    #[test]
    fn example5_shape() {
        let pair = example5_pair();
        assert_eq!((pair.base.n, pair.base.p), (2, 1));
        let i1 = &pair.base.neurons[0].input;
        assert!((i1.eval_unchecked(&[0.0]) - 2.0).abs() < 1e-15);
        let i2 = &pair.partner.neurons[1].input;
        assert!((i2.eval_unchecked(&[0.0]) - 1.0).abs() < 1e-15);
        assert!(pair.partner.c_terms.iter().all(|c| !c.c.to_string().contains("exp")));
    }

    #[test]
    fn static_kernel_refuses_equality_case() {
        let err = static_kernel(&StaticKernelParams {
            amplitude: 0.5,
            rate: 1.0,
        })
        .unwrap_err();
        assert!(matches!(err, BuiltinError::Rejected(_)));
        let spec = build_model(&static_kernel(&StaticKernelParams::default()).unwrap()).unwrap();
        for k in 0..=100 {
            let t = k as f64 * 0.0628;
            assert!(h7_value(&spec, &[1.0, 1.0], t).iter().all(|v| *v < 0.0));
        }
    }

    #[test]
    fn highorder_refuses_strong_coupling() {
        let strong = HighOrderParams {
            rho: [1.0, 1.0],
            coupling: 2.0,
        };
        assert!(highorder_periodic(&strong).is_err());
    }
}
