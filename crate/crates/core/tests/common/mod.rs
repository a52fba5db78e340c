#![allow(dead_code)]

use cgnn_core::config::ConfigDocument;
use cgnn_core::dde::{DdeError, StateSource};
use cgnn_core::experiments::example5;
use cgnn_core::model::{build_model, ModelSpec};

pub fn model_from(text: &str) -> ModelSpec {
    build_model(&ConfigDocument::from_toml(text).expect("test document parses")).expect("test document builds")
}

/// State given by a closure of (t, component).
pub struct FnSource<F: Fn(f64, usize) -> f64>(pub F);

impl<F: Fn(f64, usize) -> f64> StateSource for FnSource<F> {
    fn state(&self, t: f64, j: usize) -> Result<f64, DdeError> {
        Ok((self.0)(t, j))
    }
}

/// x' = -x with a constant history of 1.
pub fn scalar_decay() -> ModelSpec {
    model_from(
        r#"
[dimensions]
n = 1
P = 1

[[amplification]]
i = 1
expr = "1"
a_lo = 1.0
a_hi = 1.0

[[selfsignal]]
i = 1
expr = "u"
beta_expr = "1"

[[outer]]
i = 1
F_expr = "0"
zeta = 0.0
sigma = 0.0
"#,
    )
}

/// x'(t) = -x(t - 1).
pub fn unit_lag() -> ModelSpec {
    model_from(
        r#"
[dimensions]
n = 1
P = 1

[[amplification]]
i = 1
expr = "1"
a_lo = 1.0
a_hi = 1.0

[[selfsignal]]
i = 1
expr = "0"
beta_expr = "0"

[[outer]]
i = 1
F_expr = "-u1"
zeta = 1.0
sigma = 0.0

[[coupling_c]]
i = 1
j = 1
l = 1
p = 1
c_expr = "1"
h_expr = "u1"
gamma1 = 1.0
gamma2 = 0.0
tau_expr = "1"
"#,
    )
}

/// One neuron, f = u1, g = u, with the given kernel written as an inline table.
pub fn kernel_probe(kernel: &str) -> ModelSpec {
    model_from(&format!(
        r#"
[dimensions]
n = 1
P = 1

[[amplification]]
i = 1
expr = "1"
a_lo = 1.0
a_hi = 1.0

[[selfsignal]]
i = 1
expr = "u"
beta_expr = "1"

[[outer]]
i = 1
F_expr = "u2"
zeta = 0.0
sigma = 1.0

[[coupling_d]]
i = 1
j = 1
l = 1
p = 1
d_expr = "1"
f_expr = "u1"
mu1 = 1.0
mu2 = 0.0
g_expr = "u"
g_tilde_expr = "u"
xi = 1.0
xi_tilde = 1.0
kernel = {kernel}
kernel_tilde = {{ type = "atom", lag = 0.0 }}
"#
    ))
}

/// a = 1, b_i = beta_i u, U_i = sum_j K_ij tanh(x_j(t - 1)).
pub fn constant_network(beta: &[f64], k: &[Vec<f64>]) -> ModelSpec {
    let n = beta.len();
    let mut text = format!("[dimensions]\nn = {n}\nP = 1\n");
    for (i, b) in beta.iter().enumerate() {
        let i = i + 1;
        text.push_str(&format!(
            "\n[[amplification]]\ni = {i}\nexpr = \"1\"\na_lo = 1.0\na_hi = 1.0\n\
             \n[[selfsignal]]\ni = {i}\nexpr = \"{b:?}*u\"\nbeta_expr = \"{b:?}\"\n\
             \n[[outer]]\ni = {i}\nF_expr = \"u1\"\nzeta = 1.0\nsigma = 0.0\n"
        ));
    }
    for (i, row) in k.iter().enumerate() {
        for (j, kij) in row.iter().enumerate() {
            if *kij == 0.0 {
                continue;
            }
            text.push_str(&format!(
                "\n[[coupling_c]]\ni = {}\nj = {}\nl = {}\np = 1\nc_expr = \"{kij:?}\"\nh_expr = \"tanh(u1)\"\n\
                 gamma1 = 1.0\ngamma2 = 0.0\ntau_expr = \"1\"\n",
                i + 1,
                j + 1,
                j + 1
            ));
        }
    }
    model_from(&text)
}

/// Example-5 right-hand side written out by hand.
fn example5_rhs(t: f64, x: [f64; 2], lag1: f64, lag2: f64) -> [f64; 2] {
    let (x1, x2) = (x[0], x[1]);
    let e = (-t).exp();
    let dx1 = (x1.sin() + 2.0)
        * (-(4.0 + e) * x1 * (x1.sin() / (1.0 + x1 * x1)).exp()
            + (t.cos() / 3.0 + e) * lag2.tanh()
            + t.sin().exp()
            + e);
    let dx2 = (x2.cos() + 2.0)
        * (-(5.0 + t.cos() + e) * x2 + (2.0 * t.sin() / 3.0 + e) * lag1.tanh() + t.cos() + e);
    [dx1, dx2]
}

/// Fixed-step Euler for example 5 with the history phi on (-inf, 0].
///
/// Delayed values are linearly interpolated on the Euler grid.
pub fn euler_example5(phi: impl Fn(f64) -> [f64; 2], h: f64, t_end: f64) -> Vec<(f64, [f64; 2])> {
    let steps = (t_end / h).round() as usize;
    let mut xs: Vec<[f64; 2]> = Vec::with_capacity(steps + 1);
    xs.push(phi(0.0));
    let lookup = |xs: &[[f64; 2]], s: f64, c: usize| -> f64 {
        if s <= 0.0 {
            return phi(s)[c];
        }
        let pos = s / h;
        let k = (pos.floor() as usize).min(xs.len() - 1);
        if k + 1 >= xs.len() {
            return xs[k][c];
        }
        let w = pos - k as f64;
        (1.0 - w) * xs[k][c] + w * xs[k + 1][c]
    };
    for n in 0..steps {
        let t = n as f64 * h;
        let lag2 = lookup(&xs, t - t.sin().abs(), 1);
        let lag1 = lookup(&xs, t - t.cos().abs(), 0);
        let x = xs[n];
        let d = example5_rhs(t, x, lag1, lag2);
        xs.push([x[0] + h * d[0], x[1] + h * d[1]]);
    }
    xs.into_iter().enumerate().map(|(n, x)| (n as f64 * h, x)).collect()
}

/// Sup-norm distance between a trajectory and the Euler oracle on [0, t_end].
pub fn euler_gap(traj: &cgnn_core::dde::Trajectory, oracle: &[(f64, [f64; 2])], stride: usize) -> f64 {
    oracle
        .iter()
        .step_by(stride)
        .map(|(t, x)| {
            let y = traj.sample(*t).expect("inside trajectory");
            (y[0] - x[0]).abs().max((y[1] - x[1]).abs())
        })
        .fold(0.0, f64::max)
}

/// Fixed-step final errors on x' = -x over [0, 1] for h, h/2, h/4.
pub fn decay_errors(h: f64) -> Vec<f64> {
    use cgnn_core::dde::{integrate, IntegratorOptions};
    use cgnn_core::memory::InitialFunction;
    let spec = scalar_decay();
    let phi = InitialFunction::parse(&["1"], 1.0).unwrap();
    [h, h / 2.0, h / 4.0]
        .iter()
        .map(|&step| {
            let opts = IntegratorOptions {
                fixed_step: Some(step),
                h_max: 1.0,
                ..IntegratorOptions::default()
            };
            let traj = integrate(&spec, &phi, 0.0, 1.0, &opts).unwrap();
            (traj.final_state()[0] - (-1.0f64).exp()).abs()
        })
        .collect()
}

/// Example 5 with one planted violation, tagged by the hypothesis it breaks.
pub fn falsification_corpus() -> Vec<(&'static str, ModelSpec)> {
    let mut small_a = example5();
    small_a.amplification[0].a_hi = 2.5;

    let mut half_lipschitz = example5();
    half_lipschitz.coupling_c[0].gamma1 = 0.5;

    let mut stalled_delay = example5();
    stalled_delay.coupling_c[0].tau_expr = "t".into();

    vec![
        ("H2", build_model(&small_a).unwrap()),
        ("H5", build_model(&half_lipschitz).unwrap()),
        ("H4", build_model(&stalled_delay).unwrap()),
    ]
}
