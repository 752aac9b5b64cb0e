//! Noise sweeps with oracle parameter choice.
//!
//! The regularization parameter of every trial is the minimizer of the
//! Bregman error over a log-spaced grid (ties go to the larger `α`). `L¹`
//! solves sweep the grid from large to small `α`, warm-starting each dual
//! solve from the previous dual variable scaled by `α_prev/α`, which maps
//! the old box onto the new one.
//!
//! Rate experiments perturb the analytic data `g†`; [`estimate_phi`] instead
//! uses the discrete forward data `T_n u†` so that the recorded errors are
//! pure approximation errors.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Error, Result};
use crate::mesh::{bregman_error, norm, Grid, Norm, Signal};
use crate::noise::{self, epsilon_profile, NoiseKind};
use crate::operators::{KernelOperator, ProblemKind, TestProblem};
use crate::rng::split_seed;
use crate::solvers::{DualSolver, Fidelity, L2Solver, SolveConfig, SolveResult};
use crate::theory::{self, IndexFunction, LinearFit, RateParams};

/// Log-spaced grid `min..=max` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Default for AlphaGrid {
    fn default() -> Self {
        Self { min: 1e-6, max: 1.0, count: 49 }
    }
}

impl AlphaGrid {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        let g = Self { min, max, count };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0 && self.min < self.max && self.max.is_finite()) {
            return invalid(format!("alpha grid needs 0 < min < max, got [{}, {}]", self.min, self.max));
        }
        if self.count < 2 {
            return invalid("alpha grid needs at least two points");
        }
        Ok(())
    }

    /// Ascending grid values.
    pub fn values(&self) -> Vec<f64> {
        let mut v = theory::log_space(self.min, self.max, self.count);
        v[0] = self.min;
        v[self.count - 1] = self.max;
        v
    }
}

/// Which fidelities a rate experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FidelitySet {
    L1,
    L2,
    Both,
}

impl FidelitySet {
    pub fn members(&self) -> Vec<Fidelity> {
        match self {
            FidelitySet::L1 => vec![Fidelity::L1],
            FidelitySet::L2 => vec![Fidelity::L2],
            FidelitySet::Both => vec![Fidelity::L1, Fidelity::L2],
        }
    }
}

impl std::fmt::Display for FidelitySet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FidelitySet::L1 => "l1",
            FidelitySet::L2 => "l2",
            FidelitySet::Both => "both",
        })
    }
}

impl std::str::FromStr for FidelitySet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(FidelitySet::L1),
            "l2" => Ok(FidelitySet::L2),
            "both" => Ok(FidelitySet::Both),
            _ => invalid(format!("unknown fidelity `{s}` (expected l1, l2 or both)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: String,
    pub n: usize,
    pub eta0_base: f64,
    pub i_min: u32,
    pub i_max: u32,
    pub trials: u32,
    pub s: f64,
    pub fidelity: FidelitySet,
    pub alpha_grid: AlphaGrid,
    pub master_seed: u64,
    /// Smoothness exponent for the predicted slope; estimated when absent.
    pub kappa: Option<f64>,
    pub gap_tol: f64,
    pub max_iter: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: "sine_1".into(),
            n: 200,
            eta0_base: 0.8,
            i_min: 1,
            i_max: 12,
            trials: 10,
            s: 1.0,
            fidelity: FidelitySet::L1,
            alpha_grid: AlphaGrid::default(),
            master_seed: 20_250_101,
            kappa: None,
            gap_tol: SolveConfig::DEFAULT_GAP_TOL,
            max_iter: SolveConfig::DEFAULT_MAX_ITER,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.problem.parse::<ProblemKind>()?;
        Grid::new(self.n)?;
        if !(self.eta0_base > 0.0 && self.eta0_base < 1.0) {
            return invalid(format!("eta0_base must lie in (0, 1), got {}", self.eta0_base));
        }
        if self.i_min > self.i_max {
            return invalid(format!("empty level range {}..={}", self.i_min, self.i_max));
        }
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return invalid(format!("amplitude s must be finite and nonnegative, got {}", self.s));
        }
        self.alpha_grid.validate()?;
        if self.alpha_grid.count < 10 {
            return invalid("alpha grid needs at least 10 points");
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0 && k <= 1.0) {
                return invalid(format!("kappa must lie in (0, 1], got {k}"));
            }
        }
        self.solve_config(1.0, Fidelity::L1).validate()
    }

    pub fn levels(&self) -> impl Iterator<Item = u32> {
        self.i_min..=self.i_max
    }

    pub fn eta0(&self, level: u32) -> f64 {
        self.eta0_base.powi(level as i32)
    }

    fn solve_config(&self, alpha: f64, fidelity: Fidelity) -> SolveConfig {
        let mut cfg = SolveConfig::new(alpha, fidelity);
        cfg.gap_tol = self.gap_tol;
        cfg.max_iter = self.max_iter;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub level: u32,
    pub eta0: f64,
    pub trial: u32,
    pub seed: u64,
    pub alpha_opt: f64,
    pub bregman_error: f64,
    /// `‖T u − g†‖_{L¹}` against exact data.
    pub l1_residual: f64,
    pub l2_error: f64,
    /// Relative duality gap; `None` for `L²`.
    pub gap: Option<f64>,
    pub converged: bool,
}

/// Outcome of [`optimal_alpha_search`].
#[derive(Debug, Clone)]
pub struct AlphaSearch {
    pub alpha_opt: f64,
    pub error: f64,
    pub result: SolveResult,
    /// `(α, bregman_error)` in ascending `α`; failed solves are omitted.
    pub scan: Vec<(f64, f64)>,
}

/// Reusable solver state for repeated searches on one operator.
pub struct Searcher<'a> {
    op: &'a KernelOperator,
    dual: Option<DualSolver<'a>>,
    l2: Option<L2Solver<'a>>,
    gap_tol: f64,
    max_iter: usize,
}

impl<'a> Searcher<'a> {
    pub fn new(op: &'a KernelOperator) -> Self {
        Self {
            op,
            dual: None,
            l2: None,
            gap_tol: SolveConfig::DEFAULT_GAP_TOL,
            max_iter: SolveConfig::DEFAULT_MAX_ITER,
        }
    }

    pub fn with_tolerances(mut self, gap_tol: f64, max_iter: usize) -> Self {
        self.gap_tol = gap_tol;
        self.max_iter = max_iter;
        self
    }

    pub fn search(&mut self, g_obs: &Signal, u_dag: &Signal, grid: &AlphaGrid, fidelity: Fidelity) -> Result<AlphaSearch> {
        grid.validate()?;
        let alphas = grid.values();
        let mut solved: Vec<(f64, f64, SolveResult)> = Vec::with_capacity(alphas.len());
        let mut failures = Vec::new();
        match fidelity {
            Fidelity::L1 => {
                let op = self.op;
                let dual = self.dual.get_or_insert_with(|| DualSolver::new(op));
                let mut warm: Option<Signal> = None;
                let mut prev_alpha = f64::NAN;
                for &alpha in alphas.iter().rev() {
                    let warm_scaled = warm.as_ref().map(|p| p.scale(prev_alpha / alpha));
                    prev_alpha = alpha;
                    let mut cfg = SolveConfig::l1(alpha);
                    cfg.gap_tol = self.gap_tol;
                    cfg.max_iter = self.max_iter;
                    match dual.solve(g_obs, &cfg, warm_scaled.as_ref()) {
                        Ok(res) => {
                            warm = res.p.clone();
                            let err = bregman_error(&res.u, u_dag)?;
                            solved.push((alpha, err, res));
                        }
                        Err(e) => failures.push(format!("alpha={alpha:e}: {e}")),
                    }
                }
                solved.reverse();
            }
            Fidelity::L2 => {
                let op = self.op;
                let l2 = self.l2.get_or_insert_with(|| L2Solver::new(op));
                for &alpha in &alphas {
                    match l2.solve(g_obs, alpha) {
                        Ok(res) => {
                            let err = bregman_error(&res.u, u_dag)?;
                            solved.push((alpha, err, res));
                        }
                        Err(e) => failures.push(format!("alpha={alpha:e}: {e}")),
                    }
                }
            }
        }
        let solved: Vec<_> = solved.into_iter().filter(|s| s.1.is_finite()).collect();
        if solved.is_empty() {
            return Err(Error::Experiment(format!(
                "every solve on the alpha grid failed: {}",
                failures.join("; ")
            )));
        }
        let scan: Vec<(f64, f64)> = solved.iter().map(|s| (s.0, s.1)).collect();
        let k = argmin_prefer_large(&scan);
        let (alpha_opt, error, result) = solved.into_iter().nth(k).expect("index in range");
        Ok(AlphaSearch { alpha_opt, error, result, scan })
    }
}

/// Index of the smallest error; errors within `1e−14 + 1e−9·min` of the
/// minimum count as ties and resolve to the largest `α`.
fn argmin_prefer_large(scan: &[(f64, f64)]) -> usize {
    let min = scan.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let tol = min + 1e-14 + 1e-9 * min;
    scan.iter().rposition(|s| s.1 <= tol).expect("nonempty scan")
}

pub fn optimal_alpha_search(
    op: &KernelOperator,
    g_obs: &Signal,
    u_dag: &Signal,
    grid: &AlphaGrid,
    fidelity: Fidelity,
) -> Result<AlphaSearch> {
    Searcher::new(op).search(g_obs, u_dag, grid, fidelity)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub level: u32,
    pub eta0: f64,
    pub mean_bregman: f64,
    pub sd_bregman: f64,
    pub mean_residual: f64,
    pub sd_residual: f64,
    /// Bregman bound minimized over the `α` grid, all constants set to one.
    pub bound_value: f64,
}

/// Least-squares fit of `log(mean error)` against `log η₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    /// 95% confidence half-width; `NaN` when fewer than three levels were used.
    pub half_width: f64,
    pub constant: f64,
    pub theoretical: f64,
    pub levels_used: Vec<u32>,
}

impl SlopeFit {
    pub fn relative_deviation(&self) -> f64 {
        (self.slope - self.theoretical).abs() / self.theoretical.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSummary {
    pub fidelity: Fidelity,
    pub levels: Vec<LevelSummary>,
    pub bregman: SlopeFit,
    pub residual: SlopeFit,
    pub kappa: f64,
    pub gamma: f64,
    /// Errors of the optimally tuned noise-free reconstruction.
    pub floor_bregman: f64,
    pub floor_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateExperiment {
    pub fidelity: Fidelity,
    pub records: Vec<TrialRecord>,
    pub summary: RateSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiFit {
    pub alphas: Vec<f64>,
    pub approx_errors: Vec<f64>,
    /// `(t, φ_est(t))`; empty for the degenerate case.
    pub envelope: Vec<(f64, f64)>,
    pub c: f64,
    pub kappa: f64,
    pub fit_residual: f64,
    /// Set when the approximation error vanishes for small `α`; then
    /// `κ = 1` and `c = 1/α*` with `α*` the largest sample where it vanishes.
    pub linear: bool,
}

impl PhiFit {
    pub fn index_function(&self) -> Result<IndexFunction> {
        IndexFunction::power(self.c, self.kappa.min(1.0))
    }
}

/// Bregman errors at or below this are treated as exact recovery.
const EXACT_RECOVERY: f64 = 1e-18;

pub fn estimate_phi(op: &KernelOperator, problem: &TestProblem, alphas: &[f64]) -> Result<PhiFit> {
    if alphas.len() < 10 {
        return invalid("estimate_phi needs at least 10 alpha samples");
    }
    let mut alphas: Vec<f64> = alphas.to_vec();
    if alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return invalid("alpha samples must be positive and finite");
    }
    alphas.sort_by(|a, b| a.total_cmp(b));
    if alphas[alphas.len() - 1] / alphas[0] < 1e3 {
        return invalid("alpha samples must span at least three decades");
    }
    let g = problem.g_dag_discrete(op)?;
    let dual = DualSolver::new(op);
    let mut errors = vec![0.0; alphas.len()];
    let mut warm: Option<Signal> = None;
    for (k, &alpha) in alphas.iter().enumerate().rev() {
        let start = warm.as_ref().map(|p| p.scale(alphas.get(k + 1).map_or(1.0, |a| a / alpha)));
        let res = dual.solve(&g, &SolveConfig::l1(alpha), start.as_ref())?;
        errors[k] = bregman_error(&res.u, &problem.u_dag)?;
        warm = res.p;
    }
    let samples: Vec<(f64, f64)> = alphas.iter().copied().zip(errors.iter().copied()).collect();
    let t = theory::default_t_grid(&samples, 60);
    let exact = errors.iter().take_while(|&&e| e <= EXACT_RECOVERY).count();
    if exact > 0 {
        // Exact recovery below a threshold: the linear (benchmark) case.
        let c = 1.0 / alphas[exact - 1];
        let envelope = match theory::phi_from_psi(&samples, &t) {
            Ok(est) => est.envelope,
            Err(_) => theory::log_space(alphas[0], alphas[alphas.len() - 1], 60)
                .into_iter()
                .map(|t| (t, c * t))
                .collect(),
        };
        return Ok(PhiFit {
            alphas,
            approx_errors: errors,
            envelope,
            c,
            kappa: 1.0,
            fit_residual: 0.0,
            linear: true,
        });
    }
    let est = theory::phi_from_psi(&samples, &t)?;
    Ok(PhiFit {
        alphas,
        approx_errors: errors,
        envelope: est.envelope,
        c: est.c,
        kappa: est.kappa,
        fit_residual: est.fit_residual,
        linear: false,
    })
}

/// Noise for trial `(level, trial)`.
pub fn trial_noise(cfg: &ExperimentConfig, grid: Grid, level: u32, trial: u32) -> Result<(u64, Signal)> {
    let seed = split_seed(cfg.master_seed, level, trial);
    let xi = noise::gen_salt_pepper(grid, cfg.eta0(level), cfg.s, seed)?.xi;
    Ok((seed, xi))
}

pub fn run_rate_experiment(cfg: &ExperimentConfig) -> Result<Vec<RateExperiment>> {
    cfg.validate()?;
    let grid = Grid::new(cfg.n)?;
    let op = KernelOperator::assemble(grid);
    let problem = TestProblem::new(cfg.problem.parse()?, grid)?;
    let g_dag = &problem.g_dag_analytic;
    let (kappa, phi) = match cfg.kappa {
        Some(k) => (k, IndexFunction::power(1.0, k)?),
        None => {
            let fit = estimate_phi(&op, &problem, &cfg.alpha_grid.values())?;
            (fit.kappa.min(1.0), fit.index_function()?)
        }
    };
    let params = RateParams::green_kernel();
    let (breg_exp, res_exp) = theory::eta_exponents(kappa, params.gamma)?;

    let noise: Vec<(u32, u32, u64, Signal)> = cfg
        .levels()
        .flat_map(|level| (0..cfg.trials).map(move |t| (level, t)))
        .map(|(level, t)| trial_noise(cfg, grid, level, t).map(|(seed, xi)| (level, t, seed, xi)))
        .collect::<Result<_>>()?;

    let mut searcher = Searcher::new(&op).with_tolerances(cfg.gap_tol, cfg.max_iter);
    let mut out = Vec::new();
    for fidelity in cfg.fidelity.members() {
        let floor = searcher.search(g_dag, &problem.u_dag, &cfg.alpha_grid, fidelity)?;
        let floor_residual = l1_residual(&op, &floor.result.u, g_dag)?;
        let mut records = Vec::with_capacity(noise.len());
        for (level, trial, seed, xi) in &noise {
            let g_obs = g_dag.add(xi)?;
            let found = searcher.search(&g_obs, &problem.u_dag, &cfg.alpha_grid, fidelity)?;
            records.push(TrialRecord {
                level: *level,
                eta0: cfg.eta0(*level),
                trial: *trial,
                seed: *seed,
                alpha_opt: found.alpha_opt,
                bregman_error: found.error,
                l1_residual: l1_residual(&op, &found.result.u, g_dag)?,
                l2_error: norm(&found.result.u.sub(&problem.u_dag)?, Norm::L2),
                gap: found.result.relative_gap,
                converged: found.result.converged,
            });
        }
        records.sort_by_key(|r| (r.level, r.trial));
        let levels = summarize_levels(cfg, &records, &noise, &params, &phi)?;
        let bregman = fit_slope(&levels, |l| l.mean_bregman, floor.error, breg_exp);
        let residual = fit_slope(&levels, |l| l.mean_residual, floor_residual, res_exp);
        out.push(RateExperiment {
            fidelity,
            records,
            summary: RateSummary {
                fidelity,
                levels,
                bregman,
                residual,
                kappa,
                gamma: params.gamma,
                floor_bregman: floor.error,
                floor_residual,
            },
        });
    }
    Ok(out)
}

fn l1_residual(op: &KernelOperator, u: &Signal, g: &Signal) -> Result<f64> {
    Ok(norm(&op.apply(u)?.sub(g)?, Norm::L1))
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

fn summarize_levels(
    cfg: &ExperimentConfig,
    records: &[TrialRecord],
    noise: &[(u32, u32, u64, Signal)],
    params: &RateParams,
    phi: &IndexFunction,
) -> Result<Vec<LevelSummary>> {
    let alphas = cfg.alpha_grid.values();
    let mut out = Vec::new();
    for level in cfg.levels() {
        let eta0 = cfg.eta0(level);
        let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.level == level).collect();
        let breg: Vec<f64> = rows.iter().map(|r| r.bregman_error).collect();
        let res: Vec<f64> = rows.iter().map(|r| r.l1_residual).collect();
        let (mean_bregman, sd_bregman) = mean_sd(&breg);
        let (mean_residual, sd_residual) = mean_sd(&res);
        let eps: Vec<f64> = noise
            .iter()
            .filter(|x| x.0 == level)
            .map(|x| epsilon_profile(&x.3).at(eta0.min(1.0)))
            .collect::<Result<_>>()?;
        let eps = mean_sd(&eps).0;
        let bound_value = alphas
            .iter()
            .map(|&a| theory::bound_bregman(params, phi, eps, eta0, a))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        out.push(LevelSummary {
            level,
            eta0,
            mean_bregman,
            sd_bregman,
            mean_residual,
            sd_residual,
            bound_value,
        });
    }
    Ok(out)
}

/// Fits over levels whose mean error is at least twice the noise-free
/// error; all levels are used when fewer than two qualify.
fn fit_slope(levels: &[LevelSummary], value: impl Fn(&LevelSummary) -> f64, floor: f64, theoretical: f64) -> SlopeFit {
    let usable = |l: &&LevelSummary| value(l) > 0.0;
    let mut chosen: Vec<&LevelSummary> = levels.iter().filter(usable).filter(|l| value(l) >= 2.0 * floor).collect();
    if chosen.len() < 2 {
        chosen = levels.iter().filter(usable).collect();
    }
    let pts: Vec<(f64, f64)> = chosen.iter().map(|l| (l.eta0.ln(), value(l).ln())).collect();
    let levels_used = chosen.iter().map(|l| l.level).collect();
    match theory::linear_fit(&pts) {
        Some(LinearFit { slope, intercept, slope_se, .. }) => SlopeFit {
            slope,
            half_width: confidence_half_width(slope_se, pts.len()),
            constant: intercept.exp(),
            theoretical,
            levels_used,
        },
        None => SlopeFit {
            slope: f64::NAN,
            half_width: f64::NAN,
            constant: f64::NAN,
            theoretical,
            levels_used,
        },
    }
}

fn confidence_half_width(se: f64, points: usize) -> f64 {
    if points < 3 {
        return f64::NAN;
    }
    match StudentsT::new(0.0, 1.0, (points - 2) as f64) {
        Ok(t) => t.inverse_cdf(0.975) * se,
        Err(_) => f64::NAN,
    }
}

/// One row of [`scale_robustness_experiment`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleRow {
    pub s: f64,
    pub l1_alpha: f64,
    pub l1_error: f64,
    pub l2_alpha: f64,
    pub l2_error: f64,
}

/// Pure-impulse noise of height `s/η₀` on one fixed carrier set, with
/// optimally tuned `L¹` and `L²` reconstructions for each `s`.
pub fn scale_robustness_experiment(
    problem: &str,
    n: usize,
    eta0: f64,
    s_list: &[f64],
    seed: u64,
    grid_spec: &AlphaGrid,
) -> Result<Vec<ScaleRow>> {
    if s_list.is_empty() {
        return invalid("s_list must be nonempty");
    }
    let grid = Grid::new(n)?;
    let op = KernelOperator::assemble(grid);
    let problem = TestProblem::new(problem.parse()?, grid)?;
    let unit = noise::gen_pure_impulse(grid, eta0, 1.0, seed)?.xi;
    let mut searcher = Searcher::new(&op);
    let mut rows = Vec::new();
    for &s in s_list {
        let g_obs = problem.g_dag_analytic.add(&unit.scale(s))?;
        let l1 = searcher.search(&g_obs, &problem.u_dag, grid_spec, Fidelity::L1)?;
        let l2 = searcher.search(&g_obs, &problem.u_dag, grid_spec, Fidelity::L2)?;
        rows.push(ScaleRow {
            s,
            l1_alpha: l1.alpha_opt,
            l1_error: l1.error,
            l2_alpha: l2.alpha_opt,
            l2_error: l2.error,
        });
    }
    Ok(rows)
}

/// Mean optimally tuned errors of both fidelities over several seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityComparison {
    pub mean_l1: f64,
    pub mean_l2: f64,
}

/// Compares fidelities under `kind` noise. Gaussian noise is rescaled to the
/// `L¹` norm of the salt-and-pepper noise drawn with the same seed, so
/// `eta0` and `s` fix its size.
pub fn compare_fidelities(
    problem: &str,
    n: usize,
    kind: NoiseKind,
    eta0: f64,
    s: f64,
    seeds: &[u64],
    grid_spec: &AlphaGrid,
) -> Result<FidelityComparison> {
    if seeds.is_empty() {
        return invalid("need at least one seed");
    }
    let grid = Grid::new(n)?;
    let op = KernelOperator::assemble(grid);
    let problem = TestProblem::new(problem.parse()?, grid)?;
    let mut searcher = Searcher::new(&op);
    let (mut l1, mut l2) = (0.0, 0.0);
    for &seed in seeds {
        let xi = match kind {
            NoiseKind::SaltPepper => noise::gen_salt_pepper(grid, eta0, s, seed)?.xi,
            NoiseKind::PureImpulse => noise::gen_pure_impulse(grid, eta0, s, seed)?.xi,
            NoiseKind::Gaussian => {
                let reference = noise::gen_salt_pepper(grid, eta0, s, seed)?.xi;
                let raw = noise::gen_gaussian(grid, 1.0, seed)?.xi;
                noise::with_l1_norm(&raw, norm(&reference, Norm::L1))
            }
        };
        let g_obs = problem.g_dag_analytic.add(&xi)?;
        l1 += searcher.search(&g_obs, &problem.u_dag, grid_spec, Fidelity::L1)?.error;
        l2 += searcher.search(&g_obs, &problem.u_dag, grid_spec, Fidelity::L2)?.error;
    }
    let m = seeds.len() as f64;
    Ok(FidelityComparison { mean_l1: l1 / m, mean_l2: l2 / m })
}
