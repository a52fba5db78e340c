//! Scripted experiments with plot-ready output.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::criteria::{find_weights, h7_limsup, pair_convergence, ConvergenceCurve, ConvergenceError, CriterionCurve};
use crate::dde::{integrate, DdeError, IntegratorOptions, Trajectory};
use crate::memory::InitialFunction;
use crate::model::{build_model, initial_conditions, ModelError, ModelSpec};

use super::builtins::{self, BuiltinName};
use super::metrics::{periodicity_defect, window_gap, MetricError};

#[derive(Debug, Error)]
pub enum RecipeError {
    #[error("unknown recipe `{0}`")]
    Unknown(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("integration of initial condition {k} failed: {source}")]
    Integrate { k: usize, source: DdeError },
    #[error(transparent)]
    Convergence(#[from] ConvergenceError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecipeName {
    Figure12Reproduction,
    SelfAttractivity,
    StaticPeriodic,
    AlmostperiodicConvergence,
}

impl RecipeName {
    pub const ALL: [RecipeName; 4] = [
        RecipeName::Figure12Reproduction,
        RecipeName::SelfAttractivity,
        RecipeName::StaticPeriodic,
        RecipeName::AlmostperiodicConvergence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RecipeName::Figure12Reproduction => "figure12_reproduction",
            RecipeName::SelfAttractivity => "self_attractivity",
            RecipeName::StaticPeriodic => "static_periodic",
            RecipeName::AlmostperiodicConvergence => "almostperiodic_convergence",
        }
    }
}

impl fmt::Display for RecipeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RecipeName {
    type Err = RecipeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RecipeName::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| RecipeError::Unknown(s.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct RecipeOptions {
    pub t_end: f64,
    pub integrator: IntegratorOptions,
    /// Upper bound on concurrent integrations; `None` reads `CGNN_LAB_THREADS`.
    pub threads: Option<usize>,
    pub tolerance: f64,
}

impl Default for RecipeOptions {
    fn default() -> Self {
        Self {
            t_end: 40.0,
            integrator: IntegratorOptions::default(),
            threads: None,
            tolerance: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub k: usize,
    pub t_end: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub max_abs_state: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value <= limit,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub recipe: RecipeName,
    pub models: Vec<String>,
    pub trajectories: Vec<(TrajectoryMeta, Trajectory)>,
    /// Pairwise convergence curves labelled `a_b`.
    pub convergence: Vec<(String, ConvergenceCurve)>,
    pub periodicity_defect: Option<f64>,
    pub criterion: Option<CriterionCurve>,
    pub checks: Vec<Check>,
}

#[derive(Serialize)]
struct ReportText<'a> {
    recipe: &'a str,
    models: &'a [String],
    all_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    periodicity_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    criterion_weights: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    criterion_limsup: Option<&'a [f64]>,
    checks: &'a [Check],
    trajectories: Vec<&'a TrajectoryMeta>,
}

impl ExperimentReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_text(&self) -> String {
        let text = ReportText {
            recipe: self.recipe.as_str(),
            models: &self.models,
            all_pass: self.all_pass(),
            periodicity_defect: self.periodicity_defect,
            criterion_weights: self.criterion.as_ref().map(|c| c.d.as_slice()),
            criterion_limsup: self.criterion.as_ref().map(|c| c.limsup.as_slice()),
            checks: &self.checks,
            trajectories: self.trajectories.iter().map(|(m, _)| m).collect(),
        };
        toml::to_string(&text).expect("report serializes")
    }

    /// Writes `trajectory_<k>.csv`, `convergence.csv`, `criterion.csv` and `report.txt`.
    pub fn write_to(&self, dir: &Path) -> Result<(), RecipeError> {
        let io = |path: PathBuf| move |source: std::io::Error| RecipeError::Io { path: path.clone(), source };
        std::fs::create_dir_all(dir).map_err(io(dir.to_path_buf()))?;
        for (meta, traj) in &self.trajectories {
            let path = dir.join(format!("trajectory_{}.csv", meta.k));
            traj.write_csv(&path).map_err(io(path.clone()))?;
        }
        let path = dir.join("convergence.csv");
        std::fs::write(&path, self.convergence_csv()).map_err(io(path.clone()))?;
        if let Some(c) = &self.criterion {
            let path = dir.join("criterion.csv");
            c.save_csv(&path).map_err(io(path.clone()))?;
        }
        let path = dir.join("report.txt");
        std::fs::write(&path, self.to_text()).map_err(io(path.clone()))?;
        Ok(())
    }

    /// All convergence curves share one grid; columns `gap_<a>_<b>`.
    pub fn convergence_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["t".to_string()];
        header.extend(self.convergence.iter().map(|(name, _)| format!("gap_{name}")));
        w.write_record(&header).expect("in-memory write");
        if let Some((_, first)) = self.convergence.first() {
            for (k, t) in first.grid.iter().enumerate() {
                let mut row = vec![t.to_string()];
                row.extend(self.convergence.iter().map(|(_, c)| c.values[k].to_string()));
                w.write_record(&row).expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

fn thread_cap(opts: &RecipeOptions) -> usize {
    opts.threads
        .or_else(|| std::env::var("CGNN_LAB_THREADS").ok().and_then(|v| v.parse().ok()))
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

/// Integrates one system from several initial functions, at most `threads` at a time.
pub fn integrate_many(
    spec: &ModelSpec,
    phis: &[(usize, InitialFunction)],
    t_end: f64,
    opts: &IntegratorOptions,
    threads: usize,
) -> Result<Vec<(usize, Trajectory)>, RecipeError> {
    let mut out = Vec::with_capacity(phis.len());
    for chunk in phis.chunks(threads.max(1)) {
        let results: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|(k, phi)| s.spawn(move || (*k, integrate(spec, phi, 0.0, t_end, opts))))
                .collect();
            handles.into_iter().map(|h| h.join().expect("integration thread panicked")).collect()
        });
        for (k, r) in results {
            out.push((k, r.map_err(|source| RecipeError::Integrate { k, source })?));
        }
    }
    Ok(out)
}

fn meta(k: usize, t: &Trajectory) -> TrajectoryMeta {
    TrajectoryMeta {
        k,
        t_end: t.t_end(),
        accepted_steps: t.accepted,
        rejected_steps: t.rejected,
        max_abs_state: t.max_abs,
    }
}

fn pairwise(trajs: &[(usize, Trajectory)], window: f64) -> Result<Vec<(String, ConvergenceCurve)>, RecipeError> {
    let mut out = Vec::new();
    for a in 0..trajs.len() {
        for b in a + 1..trajs.len() {
            let curve = pair_convergence(&trajs[a].1.history, &trajs[b].1.history, window)?;
            out.push((format!("{}_{}", trajs[a].0, trajs[b].0), curve));
        }
    }
    Ok(out)
}

/// Shared body: integrate, compare pairwise, optionally test periodicity.
struct Plan {
    recipe: RecipeName,
    builtin: BuiltinName,
    initial: Vec<usize>,
    /// Period for the defect check and the criterion window; `None` for aperiodic limits.
    period: Option<f64>,
    /// Fixed weights for the criterion curve; searched for when absent.
    weights: Option<Vec<f64>>,
    /// Window [t_a, t_b] for the final sup gap.
    gap_window: Option<(f64, f64)>,
    /// Criterion grid span and tail fraction.
    criterion: (f64, f64),
}

fn execute(plan: Plan, opts: &RecipeOptions) -> Result<ExperimentReport, RecipeError> {
    let doc = plan.builtin.document();
    let spec = build_model(&doc)?;
    let phis: Vec<(usize, InitialFunction)> = initial_conditions(&doc)?
        .into_iter()
        .filter(|(k, _)| plan.initial.contains(k))
        .collect();
    let trajs = integrate_many(&spec, &phis, opts.t_end, &opts.integrator, thread_cap(opts))?;
    let window = 2.0 * PI;
    let convergence = pairwise(&trajs, window)?;
    let tol = opts.tolerance;
    let t_end = opts.t_end;

    let mut checks = Vec::new();
    for (name, curve) in &convergence {
        checks.push(Check::at_most(format!("convergence_{name}"), curve.final_value(), tol));
    }
    if let Some((t_a, t_b)) = plan.gap_window {
        for a in 0..trajs.len() {
            for b in a + 1..trajs.len() {
                let g = window_gap(&trajs[a].1.history, &trajs[b].1.history, t_a, t_b)?;
                checks.push(Check::at_most(format!("gap_{}_{}", trajs[a].0, trajs[b].0), g, tol));
            }
        }
    }
    let mut defect = None;
    if let Some(omega) = plan.period {
        let t_a = t_end - 10.0;
        let mut worst: f64 = 0.0;
        for (_, t) in &trajs {
            worst = worst.max(periodicity_defect(&t.history, omega, t_a, t_end - omega)?);
        }
        checks.push(Check::at_most("periodicity_defect", worst, tol));
        defect = Some(worst);
    }

    let (criterion_span, tail) = plan.criterion;
    let step = criterion_span / 4000.0;
    let d = match plan.weights {
        Some(d) => Some(d),
        None => find_weights(&spec, criterion_span, step, tail).ok().map(|w| w.d),
    };
    let criterion = d.map(|d| h7_limsup(&spec, &d, criterion_span, step, tail));
    match &criterion {
        Some(c) => {
            let worst = c.limsup.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            checks.push(Check {
                name: "criterion_limsup".into(),
                value: worst,
                limit: 0.0,
                pass: c.verdict(),
            });
        }
        None => checks.push(Check {
            name: "criterion_weights".into(),
            value: f64::INFINITY,
            limit: 1.0,
            pass: false,
        }),
    }

    Ok(ExperimentReport {
        recipe: plan.recipe,
        models: vec![plan.builtin.as_str().to_string()],
        trajectories: trajs.into_iter().map(|(k, t)| (meta(k, &t), t)).collect(),
        convergence,
        periodicity_defect: defect,
        criterion,
        checks,
    })
}

pub fn run_recipe(name: RecipeName, opts: &RecipeOptions) -> Result<ExperimentReport, RecipeError> {
    let t_end = opts.t_end;
    let plan = match name {
        RecipeName::Figure12Reproduction => Plan {
            recipe: name,
            builtin: BuiltinName::Example5,
            initial: vec![1, 2, 3],
            period: Some(2.0 * PI),
            weights: Some(vec![1.0, 1.0]),
            gap_window: Some((t_end - 10.0, t_end)),
            criterion: (t_end, 0.5),
        },
        RecipeName::SelfAttractivity => Plan {
            recipe: name,
            builtin: BuiltinName::Example5,
            initial: vec![1, 2],
            period: None,
            weights: Some(vec![1.0, 1.0]),
            gap_window: None,
            criterion: (t_end, 0.5),
        },
        RecipeName::StaticPeriodic => Plan {
            recipe: name,
            builtin: BuiltinName::StaticKernel,
            initial: vec![1, 2],
            period: Some(2.0 * PI),
            weights: None,
            gap_window: None,
            criterion: (2.0 * PI, 1.0),
        },
        RecipeName::AlmostperiodicConvergence => Plan {
            recipe: name,
            builtin: BuiltinName::LoworderAlmostperiodic,
            initial: vec![1, 2],
            period: None,
            weights: None,
            gap_window: None,
            criterion: (t_end, 0.5),
        },
    };
    execute(plan, opts)
}

/// Example 5 initial functions as parsed objects, in order.
pub fn figure_initial_functions() -> Vec<InitialFunction> {
    initial_conditions(&builtins::example5())
        .expect("valid")
        .into_iter()
        .map(|(_, phi)| phi)
        .collect()
}
