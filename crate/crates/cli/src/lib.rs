//! Command-line front end: `solve`, `rates`, `epsilon` and `estimate-phi`.
//!
//! Every command writes its outputs into `--out` together with a
//! `manifest.json` describing the run. The manifest's `argv` reproduces the
//! outputs byte for byte; `rates` additionally writes `config_snapshot.cfg`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use l1tik::experiments::{self, AlphaGrid, ExperimentConfig, RateExperiment};
use l1tik::noise::{self, epsilon_profile, NoiseRealization};
use l1tik::operators::make_test_problem;
use l1tik::report;
use l1tik::solvers::{self, DualMethod, Fidelity, SolveConfig};
use l1tik::theory::{self, IndexFunction};
use l1tik::{bregman_error, norm, Grid, KernelOperator, Norm, Signal};

#[derive(Debug, Parser)]
#[command(name = "l1tik", version, about = "L1/L2 Tikhonov regularization and impulsive-noise rate experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reconstruct from (optionally noisy) data for one alpha.
    Solve(SolveArgs),
    /// Run a noise sweep with oracle alpha choice and fit rates.
    Rates(RatesArgs),
    /// Tabulate the impulsiveness profile of a noise vector.
    Epsilon(EpsilonArgs),
    /// Estimate the index function from approximation errors.
    EstimatePhi(EstimatePhiArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseChoice {
    None,
    SaltPepper,
    Pure,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FidelityArg {
    L1,
    L2,
}

impl From<FidelityArg> for Fidelity {
    fn from(f: FidelityArg) -> Self {
        match f {
            FidelityArg::L1 => Fidelity::L1,
            FidelityArg::L2 => Fidelity::L2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    ActiveSet,
    ProjectedNewton,
    Accelerated,
}

impl From<MethodArg> for DualMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::ActiveSet => DualMethod::ActiveSet,
            MethodArg::ProjectedNewton => DualMethod::ProjectedNewton,
            MethodArg::Accelerated => DualMethod::Accelerated,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long, default_value = "sine_1")]
    pub problem: String,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "l1")]
    pub fidelity: FidelityArg,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "none")]
    pub noise: NoiseChoice,
    #[arg(long, default_value_t = 0.1)]
    pub eta0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = SolveConfig::DEFAULT_GAP_TOL)]
    pub gap_tol: f64,
    #[arg(long, default_value_t = SolveConfig::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value = "active-set")]
    pub method: MethodArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RatesArgs {
    /// Flat `key = value` config; defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set trials=2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EpsilonArgs {
    #[arg(long, value_enum, default_value = "salt-pepper")]
    pub noise: NoiseChoice,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub eta0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Noise samples: a noise record, or whitespace-separated numbers.
    #[arg(long, conflicts_with = "noise")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 5.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub kappa: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EstimatePhiArgs {
    #[arg(long, default_value = "sine_1")]
    pub problem: String,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 49)]
    pub alpha_count: usize,
    /// Skip the solver and use the closed-form ψ of `c t^κ`, given as `c,kappa`.
    #[arg(long, value_name = "C,KAPPA")]
    pub synthetic: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name.
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub master_seed: Option<u64>,
    pub version: String,
    pub timestamp: u64,
    pub outputs: Vec<String>,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, command: &str, argv: &[String], config: serde_json::Value, seed: Option<u64>) -> Result<()> {
        self.files.push("manifest.json".into());
        let manifest = RunManifest {
            command: command.into(),
            argv: argv.to_vec(),
            config,
            master_seed: seed,
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            outputs: self.files.clone(),
        };
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(self.dir.join("manifest.json"), text).context("cannot write manifest")?;
        Ok(())
    }
}

fn make_noise(choice: NoiseChoice, grid: Grid, eta0: f64, s: f64, sigma: f64, seed: u64) -> Result<Option<NoiseRealization>> {
    Ok(match choice {
        NoiseChoice::None => None,
        NoiseChoice::SaltPepper => Some(noise::gen_salt_pepper(grid, eta0, s, seed)?),
        NoiseChoice::Pure => Some(noise::gen_pure_impulse(grid, eta0, s, seed)?),
        NoiseChoice::Gaussian => Some(noise::gen_gaussian(grid, sigma, seed)?),
    })
}

fn columns(x: &[f64], cols: &[&[f64]], header: &str) -> String {
    let mut s = format!("# {header}\n");
    for (i, xi) in x.iter().enumerate() {
        let _ = write!(s, "{xi:e}");
        for c in cols {
            let _ = write!(s, " {:e}", c[i]);
        }
        s.push('\n');
    }
    s
}

/// Runs `solve`; returns the one-line summary.
pub fn cmd_solve(args: &SolveArgs, argv: &[String]) -> Result<String> {
    let grid = Grid::new(args.n)?;
    let op = KernelOperator::assemble(grid);
    let problem = make_test_problem(&args.problem, grid)?;
    let noise = make_noise(args.noise, grid, args.eta0, args.s, args.sigma, args.seed)?;
    let g_obs = match &noise {
        Some(nr) => problem.g_dag_analytic.add(&nr.xi)?,
        None => problem.g_dag_analytic.clone(),
    };
    let mut cfg = SolveConfig::new(args.alpha, args.fidelity.into()).with_method(args.method.into());
    cfg.gap_tol = args.gap_tol;
    cfg.max_iter = args.max_iter;
    let res = solvers::solve(&op, &g_obs, &cfg)?;

    let mut out = Outputs::new(&args.out)?;
    let x = grid.points();
    out.write(
        "solution.dat",
        &columns(&x, &[res.u.values(), problem.u_dag.values()], "x u u_dag"),
    )?;
    let residual = op.apply(&res.u)?.sub(&g_obs)?;
    out.write("residual.dat", &columns(&x, &[residual.values()], "x residual"))?;
    if let Some(p) = &res.p {
        out.write("dual.dat", &columns(&x, &[p.values()], "x p"))?;
    }
    if let Some(nr) = &noise {
        out.write("noise.rec", &nr.to_record())?;
    }
    let error = bregman_error(&res.u, &problem.u_dag)?;
    let mut result = String::new();
    let _ = writeln!(result, "alpha = {:e}", args.alpha);
    let _ = writeln!(result, "fidelity = {}", cfg.fidelity);
    let _ = writeln!(result, "bregman_error = {error:e}");
    let _ = writeln!(result, "norm_u = {:e}", norm(&res.u, Norm::L2));
    let _ = writeln!(result, "primal_value = {:e}", res.primal_value);
    let _ = writeln!(result, "gap = {:e}", res.gap.unwrap_or(0.0));
    let _ = writeln!(result, "relative_gap = {:e}", res.relative_gap.unwrap_or(0.0));
    let _ = writeln!(result, "iterations = {}", res.iterations);
    let _ = writeln!(result, "converged = {}", res.converged);
    out.write("result.txt", &result)?;
    out.finish(
        "solve",
        argv,
        serde_json::json!({
            "problem": args.problem, "n": args.n, "fidelity": cfg.fidelity.to_string(),
            "alpha": args.alpha, "noise": format!("{:?}", args.noise), "eta0": args.eta0,
            "s": args.s, "sigma": args.sigma, "gap_tol": args.gap_tol, "max_iter": args.max_iter,
        }),
        Some(args.seed),
    )?;
    Ok(format!(
        "alpha={:e} error={:e} norm_u={:e} gap={:e} converged={}",
        args.alpha,
        error,
        norm(&res.u, Norm::L2),
        res.relative_gap.unwrap_or(0.0),
        res.converged
    ))
}

pub fn load_rates_config(args: &RatesArgs) -> Result<ExperimentConfig> {
    let mut text = match &args.config {
        Some(path) => fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?,
        None => String::new(),
    };
    for o in &args.overrides {
        if !o.contains('=') {
            bail!("override `{o}` is not KEY=VALUE");
        }
        text.push('\n');
        text.push_str(o);
    }
    if let Some(seed) = args.seed {
        let _ = write!(text, "\nmaster_seed = {seed}");
    }
    Ok(report::parse_config(&text)?)
}

fn rates_files(out: &mut Outputs, exp: &RateExperiment, suffix: &str) -> Result<()> {
    out.write(&format!("trials{suffix}.csv"), &report::trials_csv(&exp.records))?;
    out.write(&format!("summary{suffix}.csv"), &report::summary_csv(&exp.summary))?;
    out.write(&format!("fit{suffix}.txt"), &report::fit_text(&exp.summary))?;
    out.write(&format!("rates{suffix}.dat"), &report::gnuplot_data(&exp.summary))?;
    Ok(())
}

/// Runs `rates`; `L¹` results (or the only fidelity) go to unsuffixed files,
/// `L²` results of a `both` run get an `_l2` suffix.
pub fn cmd_rates(args: &RatesArgs, argv: &[String]) -> Result<Vec<RateExperiment>> {
    let cfg = load_rates_config(args)?;
    let results = experiments::run_rate_experiment(&cfg)?;
    let mut out = Outputs::new(&args.out)?;
    out.write("config_snapshot.cfg", &report::write_config(&cfg))?;
    for (k, exp) in results.iter().enumerate() {
        let suffix = if k == 0 { String::new() } else { format!("_{}", exp.fidelity) };
        rates_files(&mut out, exp, &suffix)?;
    }
    let snapshot: serde_json::Map<String, serde_json::Value> = report::write_config(&cfg)
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), serde_json::Value::String(v.to_string())))
        .collect();
    out.finish("rates", argv, serde_json::Value::Object(snapshot), Some(cfg.master_seed))?;
    Ok(results)
}

fn read_samples(path: &Path) -> Result<Signal> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    if text.lines().any(|l| l.trim() == "values") {
        return Ok(NoiseRealization::from_record(&text)?.xi);
    }
    let values = text
        .split_whitespace()
        .map(|t| t.parse::<f64>().with_context(|| format!("bad sample `{t}`")))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Signal::new(Grid::new(values.len())?, values)?)
}

/// Runs `epsilon`; returns `(η̄, improvement factor)`.
pub fn cmd_epsilon(args: &EpsilonArgs, argv: &[String]) -> Result<(f64, f64)> {
    let mut out = Outputs::new(&args.out)?;
    let (xi, seed) = match &args.input {
        Some(path) => (read_samples(path)?, None),
        None => {
            let grid = Grid::new(args.n)?;
            let Some(nr) = make_noise(args.noise, grid, args.eta0, args.s, args.sigma, args.seed)? else {
                bail!("--noise none has no profile; choose a noise kind or --input");
            };
            out.write("noise.rec", &nr.to_record())?;
            (nr.xi, Some(args.seed))
        }
    };
    let profile = epsilon_profile(&xi);
    out.write("profile.dat", &report::table("eta eps", profile.breakpoints().iter().copied()))?;
    let bar = noise::eta_bar(&profile, args.gamma, args.kappa)?;
    let factor = noise::improvement_factor(&profile, bar.eta, args.kappa)?;
    let mut summary = String::new();
    let _ = writeln!(summary, "l1_norm = {:e}", profile.total());
    let _ = writeln!(summary, "linf_norm = {:e}", norm(&xi, Norm::Linf));
    let _ = writeln!(summary, "gamma = {:e}", args.gamma);
    let _ = writeln!(summary, "kappa = {:e}", args.kappa);
    let _ = writeln!(summary, "eta_bar = {:e}", bar.eta);
    let _ = writeln!(summary, "improvement_factor = {factor:e}");
    out.write("epsilon.txt", &summary)?;
    out.finish(
        "epsilon",
        argv,
        serde_json::json!({
            "noise": format!("{:?}", args.noise), "n": xi.len(), "eta0": args.eta0, "s": args.s,
            "sigma": args.sigma, "input": args.input.as_ref().map(|p| p.display().to_string()),
            "gamma": args.gamma, "kappa": args.kappa,
        }),
        seed,
    )?;
    Ok((bar.eta, factor))
}

/// Result of `estimate-phi`: `(c, κ, fit residual, linear flag)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiSummary {
    pub c: f64,
    pub kappa: f64,
    pub fit_residual: f64,
    pub linear: bool,
}

fn parse_pair(text: &str) -> Result<(f64, f64)> {
    let Some((a, b)) = text.split_once(',') else {
        bail!("expected `c,kappa`, got `{text}`");
    };
    Ok((a.trim().parse()?, b.trim().parse()?))
}

pub fn cmd_estimate_phi(args: &EstimatePhiArgs, argv: &[String]) -> Result<PhiSummary> {
    let grid_spec = AlphaGrid::new(args.alpha_min, args.alpha_max, args.alpha_count)?;
    let alphas = grid_spec.values();
    let (samples, envelope, summary) = match &args.synthetic {
        Some(spec) => {
            let (c, kappa) = parse_pair(spec)?;
            let phi = IndexFunction::power(c, kappa)?;
            let samples: Vec<(f64, f64)> = alphas
                .iter()
                .map(|&a| theory::psi(&phi, a).map(|v| (a, v)))
                .collect::<l1tik::Result<_>>()?;
            if samples.iter().any(|s| !s.1.is_finite()) {
                bail!("synthetic psi is infinite on part of the alpha range");
            }
            let est = theory::phi_from_psi(&samples, &theory::default_t_grid(&samples, 60))?;
            let summary = PhiSummary {
                c: est.c,
                kappa: est.kappa,
                fit_residual: est.fit_residual,
                linear: est.degenerate,
            };
            (samples, est.envelope, summary)
        }
        None => {
            let grid = Grid::new(args.n)?;
            let op = KernelOperator::assemble(grid);
            let problem = make_test_problem(&args.problem, grid)?;
            let fit = experiments::estimate_phi(&op, &problem, &alphas)?;
            let samples = fit.alphas.iter().copied().zip(fit.approx_errors.iter().copied()).collect();
            let summary = PhiSummary {
                c: fit.c,
                kappa: fit.kappa,
                fit_residual: fit.fit_residual,
                linear: fit.linear,
            };
            (samples, fit.envelope, summary)
        }
    };
    let mut out = Outputs::new(&args.out)?;
    out.write("approx_error.dat", &report::table("alpha approx_error", samples))?;
    out.write("phi_est.dat", &report::table("t phi_est", envelope))?;
    let mut fit = String::new();
    let _ = writeln!(fit, "c = {:e}", summary.c);
    let _ = writeln!(fit, "kappa = {:e}", summary.kappa);
    let _ = writeln!(fit, "fit_residual = {:e}", summary.fit_residual);
    let _ = writeln!(fit, "kappa_flag_linear = {}", summary.linear);
    out.write("fit.txt", &fit)?;
    out.finish(
        "estimate-phi",
        argv,
        serde_json::json!({
            "problem": args.problem, "n": args.n, "alpha_min": args.alpha_min,
            "alpha_max": args.alpha_max, "alpha_count": args.alpha_count, "synthetic": args.synthetic,
        }),
        None,
    )?;
    Ok(summary)
}

/// Parses `argv` (without the program name) and runs the command; returns
/// the process exit code. Solver non-convergence is not an error.
pub fn run(argv: &[String]) -> i32 {
    let full = std::iter::once("l1tik".to_string()).chain(argv.iter().cloned());
    let cli = match Cli::try_parse_from(full) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => cmd_solve(a, argv).map(|line| println!("{line}")),
        Command::Rates(a) => cmd_rates(a, argv).map(|res| {
            for exp in &res {
                let s = &exp.summary;
                println!(
                    "{}: bregman slope {:.3} (theory {:.3}), residual slope {:.3} (theory {:.3})",
                    s.fidelity, s.bregman.slope, s.bregman.theoretical, s.residual.slope, s.residual.theoretical
                );
            }
        }),
        Command::Epsilon(a) => cmd_epsilon(a, argv).map(|(eta, f)| println!("eta_bar={eta:e} improvement_factor={f:e}")),
        Command::EstimatePhi(a) => cmd_estimate_phi(a, argv).map(|s| {
            println!(
                "c={:e} kappa={:e} fit_residual={:e} linear={}",
                s.c, s.kappa, s.fit_residual, s.linear
            )
        }),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
