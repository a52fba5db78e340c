//! `cgnn-lab`: simulate, check and compare Cohen–Grossberg delay networks.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success, every verdict passed |
//! | 1 | configuration or usage error |
//! | 2 | blow-up guard tripped during integration |
//! | 3 | a criterion or convergence verdict failed |
//! | 4 | the pair is not asymptotic |
//! | 5 | step size underflow |

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use cgnn_core::config::ConfigDocument;
use cgnn_core::criteria::{
    default_gap_check, find_weights, h7_limsup, pair_convergence, validate_hypotheses, Windows,
};
use cgnn_core::dde::{integrate, DdeError, IntegratorOptions, Trajectory};
use cgnn_core::experiments::{BuiltinName, RecipeError, RecipeName, RecipeOptions};
use cgnn_core::memory::InitialFunction;
use cgnn_core::model::{build_model, initial_conditions, AsymptoticPair, ModelSpec};

#[derive(Debug, Parser)]
#[command(name = "cgnn-lab", version, about = "Cohen–Grossberg delay network laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one initial condition of a model config.
    Simulate {
        config: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 40.0)]
        t_end: f64,
        /// Initial condition `k` from the config.
        #[arg(long, default_value_t = 1)]
        ic: usize,
        /// Directory for `trajectory.csv` and `report.txt`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tol: Tolerances,
    },
    /// Sample the hypotheses and evaluate the limsup criterion.
    Check {
        config: PathBuf,
        #[arg(long, default_value_t = 200.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
        /// Comma-separated weights, e.g. `1,1`.
        #[arg(long, conflicts_with = "find_d")]
        d: Option<String>,
        /// Search for weights instead of taking them from `--d`.
        #[arg(long)]
        find_d: bool,
        /// Write `criterion.csv` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that two configs form an asymptotic pair and that their solutions converge.
    Compare {
        config_a: PathBuf,
        config_b: PathBuf,
        #[arg(long, default_value_t = 1)]
        ic: usize,
        #[arg(long, default_value_t = 40.0)]
        t_end: f64,
        #[arg(long, default_value_t = 2.0)]
        window: f64,
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
        /// Write `convergence.csv` here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tol_opts: Tolerances,
    },
    /// Run a scripted experiment.
    Recipe {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 40.0)]
        t_end: f64,
        /// Cap on concurrent integrations (defaults to `CGNN_LAB_THREADS`).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print or save a built-in model config.
    Builtin {
        /// Builtin name, or `list`.
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Tolerances {
    #[arg(long, default_value_t = 1e-8)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-10)]
    atol: f64,
    #[arg(long, default_value_t = 0.1)]
    h_max: f64,
    #[arg(long, default_value_t = 1e-12)]
    h_min: f64,
    #[arg(long, default_value_t = 1e-3)]
    h_init: f64,
    #[arg(long, default_value_t = 1e6)]
    guard: f64,
    /// Uniform step size with no error control.
    #[arg(long)]
    fixed_step: Option<f64>,
}

impl Tolerances {
    fn options(&self) -> IntegratorOptions {
        IntegratorOptions {
            rel_tol: self.rtol,
            abs_tol: self.atol,
            h_max: self.h_max,
            h_min: self.h_min,
            h_init: self.h_init,
            guard_bound: self.guard,
            fixed_step: self.fixed_step,
            ..IntegratorOptions::default()
        }
    }
}

/// An error carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self {
            code,
            error: error.into(),
        }
    }

    fn config(error: impl Into<anyhow::Error>) -> Self {
        Self::new(1, error)
    }
}

fn dde_code(e: &DdeError) -> u8 {
    match e {
        DdeError::Guard { .. } => 2,
        DdeError::Underflow { .. } => 5,
        _ => 1,
    }
}

impl From<DdeError> for Failure {
    fn from(e: DdeError) -> Self {
        Self::new(dde_code(&e), e)
    }
}

type Outcome = Result<u8, Failure>;

fn load(path: &Path) -> Result<(ConfigDocument, ModelSpec), Failure> {
    let doc = ConfigDocument::load(path).map_err(Failure::config)?;
    let spec = build_model(&doc)
        .with_context(|| format!("in {}", path.display()))
        .map_err(Failure::config)?;
    Ok((doc, spec))
}

fn pick_initial(doc: &ConfigDocument, k: usize) -> Result<InitialFunction, Failure> {
    initial_conditions(doc)
        .map_err(Failure::config)?
        .into_iter()
        .find(|(kk, _)| *kk == k)
        .map(|(_, phi)| phi)
        .ok_or_else(|| Failure::config(anyhow::anyhow!("initial: no condition with k = {k}")))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::config)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create {}", dir.display()))
        .map_err(Failure::config)
}

fn simulate(config: &Path, t0: f64, t_end: f64, ic: usize, out: Option<&Path>, tol: &Tolerances) -> Outcome {
    let (doc, spec) = load(config)?;
    let phi = pick_initial(&doc, ic)?;
    let traj = integrate(&spec, &phi, t0, t_end, &tol.options())?;
    let report = traj.report();
    if let Some(dir) = out {
        create_dir(dir)?;
        let csv = dir.join("trajectory.csv");
        traj.write_csv(&csv)
            .with_context(|| format!("cannot write {}", csv.display()))
            .map_err(Failure::config)?;
        write_file(&dir.join("report.txt"), &report)?;
    }
    print!("{report}");
    println!("final_state = {:?}", traj.final_state());
    Ok(0)
}

fn parse_weights(text: &str, n: usize) -> Result<Vec<f64>, Failure> {
    let d = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("--d: cannot parse `{text}`"))
        .map_err(Failure::config)?;
    if d.len() != n || d.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Failure::config(anyhow::anyhow!("--d: expected {n} positive weights, got `{text}`")));
    }
    Ok(d)
}

fn check(config: &Path, t_max: f64, grid_step: f64, d: Option<&str>, find_d: bool, out: Option<&Path>) -> Outcome {
    let (_, spec) = load(config)?;
    let mut code = 0;
    let weights = match (d, find_d) {
        (Some(text), _) => Some(parse_weights(text, spec.n)?),
        (None, true) => match find_weights(&spec, t_max, grid_step, 0.5) {
            Ok(w) => {
                println!("[weights]\nd = {:?}\nradius = {:?}\n", w.d, w.radius);
                Some(w.d)
            }
            Err(e) => {
                println!("[weights]\nerror = {:?}\n", e.to_string());
                eprintln!("weight search failed: {e}");
                code = 3;
                None
            }
        },
        (None, false) => None,
    };
    let windows = Windows {
        d: weights.clone(),
        ..Windows::default()
    };
    let report = validate_hypotheses(&spec, &windows);
    print!("{}", report.to_text());
    if !report.all_pass() {
        code = 3;
    }
    let d = weights.or(report.d.clone());
    if let Some(d) = d {
        let curve = h7_limsup(&spec, &d, t_max, grid_step, 0.5);
        println!("\n[criterion]\nd = {:?}\nt_max = {t_max:?}\nlimsup = {:?}", curve.d, curve.limsup);
        println!("verdict = {:?}", if curve.verdict() { "negative" } else { "not-negative" });
        if !curve.verdict() {
            code = 3;
        }
        if let Some(dir) = out {
            create_dir(dir)?;
            let path = dir.join("criterion.csv");
            curve
                .save_csv(&path)
                .with_context(|| format!("cannot write {}", path.display()))
                .map_err(Failure::config)?;
        }
    } else {
        code = 3;
    }
    Ok(code)
}

struct CompareArgs<'a> {
    config_a: &'a Path,
    config_b: &'a Path,
    ic: usize,
    t_end: f64,
    window: f64,
    tol: f64,
    out: Option<&'a Path>,
    opts: IntegratorOptions,
}

fn compare(a: CompareArgs<'_>) -> Outcome {
    let (doc_a, spec_a) = load(a.config_a)?;
    let (_, spec_b) = load(a.config_b)?;
    let pair = AsymptoticPair::new(spec_a, spec_b).map_err(|e| Failure::new(4, e))?;
    let gaps = default_gap_check(&pair);
    println!("[gap]");
    for g in &gaps {
        println!("probe = {:?}, max_gap = {:?}, decays = {}", g.probe, g.max_gap(), g.verdict());
    }
    if let Some(bad) = gaps.iter().find(|g| !g.verdict()) {
        let names: Vec<&str> = bad.failing().map(|s| s.name.as_str()).collect();
        return Err(Failure::new(
            4,
            anyhow::anyhow!("pair is not asymptotic: gaps of {} do not vanish", names.join(", ")),
        ));
    }
    let phi = pick_initial(&doc_a, a.ic)?;
    let run = |spec: &ModelSpec| -> Result<Trajectory, Failure> { Ok(integrate(spec, &phi, 0.0, a.t_end, &a.opts)?) };
    let (ta, tb) = (run(&pair.base)?, run(&pair.partner)?);
    let curve = pair_convergence(&ta.history, &tb.history, a.window).map_err(Failure::config)?;
    let pass = curve.converges(a.tol);
    println!(
        "\n[convergence]\nwindow = {:?}\nfinal_value = {:?}\ntolerance = {:?}\nconverges = {pass}",
        a.window,
        curve.final_value(),
        a.tol
    );
    if let Some(dir) = a.out {
        create_dir(dir)?;
        let path = dir.join("convergence.csv");
        let file = std::fs::File::create(&path)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::config)?;
        curve.write_csv(std::io::BufWriter::new(file)).map_err(Failure::config)?;
    }
    Ok(if pass { 0 } else { 3 })
}

fn recipe(name: &str, out: Option<&Path>, t_end: f64, threads: Option<usize>) -> Outcome {
    let name: RecipeName = name.parse().map_err(Failure::config)?;
    let opts = RecipeOptions {
        t_end,
        threads,
        ..RecipeOptions::default()
    };
    let report = cgnn_core::experiments::run_recipe(name, &opts).map_err(|e| match &e {
        RecipeError::Integrate { source, .. } => {
            let code = dde_code(source);
            Failure::new(code, e)
        }
        _ => Failure::config(e),
    })?;
    if let Some(dir) = out {
        report.write_to(dir).map_err(Failure::config)?;
    }
    print!("{}", report.to_text());
    Ok(if report.all_pass() { 0 } else { 3 })
}

fn builtin(name: &str, out: Option<&Path>) -> Outcome {
    if name == "list" {
        for b in BuiltinName::ALL {
            println!("{b}");
        }
        return Ok(0);
    }
    let b: BuiltinName = name.parse().map_err(Failure::config)?;
    let text = b.document().to_toml().map_err(Failure::config)?;
    match out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Simulate {
            config,
            t0,
            t_end,
            ic,
            out,
            tol,
        } => simulate(&config, t0, t_end, ic, out.as_deref(), &tol),
        Command::Check {
            config,
            t_max,
            grid_step,
            d,
            find_d,
            out,
        } => check(&config, t_max, grid_step, d.as_deref(), find_d, out.as_deref()),
        Command::Compare {
            config_a,
            config_b,
            ic,
            t_end,
            window,
            tol,
            out,
            tol_opts,
        } => compare(CompareArgs {
            config_a: &config_a,
            config_b: &config_b,
            ic,
            t_end,
            window,
            tol,
            out: out.as_deref(),
            opts: tol_opts.options(),
        }),
        Command::Recipe {
            name,
            out,
            t_end,
            threads,
        } => recipe(&name, out.as_deref(), t_end, threads),
        Command::Builtin { name, out } => builtin(&name, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
