//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::fs;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use l1tik::experiments::{compare_fidelities, estimate_phi, scale_robustness_experiment, AlphaGrid};
use l1tik::noise::{epsilon_profile, gen_pure_impulse, NoiseKind};
use l1tik::operators::make_test_problem;
use l1tik::solvers::{solve_l1_dual, SolveConfig};
use l1tik::theory::{default_t_grid, phi_from_psi, psi, IndexFunction};
use l1tik::{bregman_error, Grid, KernelOperator, Signal};
use l1tik_cli::{cmd_rates, RatesArgs};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_operator_order() -> Outcome {
    let err = |n: usize| {
        let grid = Grid::new(n).unwrap();
        let op = KernelOperator::assemble(grid);
        let problem = make_test_problem("sine_1", grid).unwrap();
        let tu = op.apply(&problem.u_dag).unwrap();
        tu.values()
            .iter()
            .zip(problem.g_dag_analytic.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let ratio = err(64) / err(128);
    outcome((3.4..=4.6).contains(&ratio), format!("err(64)/err(128) = {ratio:.4}"))
}

/// Minimum over all subsets `C` with `|C| ≤ j` of `(1/n) Σ_{i∉C} |ξ_i|`.
fn exhaustive_eps(values: &[f64], j: usize) -> f64 {
    let n = values.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize > j {
            continue;
        }
        let rest: f64 = (0..n).filter(|i| mask & (1 << i) == 0).map(|i| values[i].abs()).sum();
        best = best.min(rest / n as f64);
    }
    best
}

fn c2_profile_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_slack = 0.0f64;
    let mut mismatches = 0;
    let mut slope_err = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(1..=12);
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let values: Vec<f64> = (0..n).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let xi = Signal::new(Grid::new(n).unwrap(), values.clone()).unwrap();
        let prof = epsilon_profile(&xi);
        for (j, &(_, eps)) in prof.breakpoints().iter().enumerate() {
            if eps != exhaustive_eps(&values, j) {
                mismatches += 1;
            }
        }
        let bp = prof.breakpoints();
        for w in bp.windows(2) {
            worst_slack = worst_slack.max(w[1].1 - w[0].1);
        }
        let slopes = prof.slopes();
        for w in slopes.windows(2) {
            worst_slack = worst_slack.max(w[0] - w[1]);
        }
        let linf = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        slope_err = slope_err.max((slopes[0] + linf).abs() / linf.max(1e-300));
    }
    outcome(
        mismatches == 0 && worst_slack <= 1e-12 && slope_err <= 1e-12,
        format!("mismatches {mismatches}, max violation {worst_slack:.1e}, slope-at-0 rel. error {slope_err:.1e}"),
    )
}

fn c3_pure_impulse() -> Outcome {
    let (n, eta0, s) = (200, 0.1, 1.0);
    let xi = gen_pure_impulse(Grid::new(n).unwrap(), eta0, s, 3).unwrap().xi;
    let prof = epsilon_profile(&xi);
    let dev = (0..=1000)
        .map(|k| eta0 * k as f64 / 1000.0)
        .map(|eta| (prof.at(eta).unwrap() - s * (1.0 - eta / eta0)).abs())
        .fold(0.0, f64::max);
    outcome(dev <= s / n as f64, format!("max deviation {dev:.2e} (bound {:.2e})", s / n as f64))
}

/// Kernel matrix assembled directly from `min{x(1−y), y(1−x)}/n`.
fn kernel_matrix(n: usize) -> DMatrix<f64> {
    let x = |i: usize| (2 * i + 1) as f64 / (2 * n) as f64;
    DMatrix::from_fn(n, n, |j, i| {
        let (a, b) = (x(j), x(i));
        (a * (1.0 - b)).min(b * (1.0 - a)) / n as f64
    })
}

/// Exhaustive KKT enumeration for `min ½pᵀHp − gᵀp, |p_i| ≤ b`: each index
/// is at `−b`, free or at `+b`; the face system is solved by LU and the
/// unique state satisfying primal and dual feasibility is returned.
fn box_qp_oracle(h: &DMatrix<f64>, g: &DVector<f64>, b: f64) -> DVector<f64> {
    let n = g.len();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0i8; n];
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as i8 - 1;
            c /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 0).collect();
        let mut p = DVector::from_fn(n, |i, _| state[i] as f64 * b);
        if !free.is_empty() {
            let hp = h * &p;
            let hff = DMatrix::from_fn(free.len(), free.len(), |a, c| h[(free[a], free[c])]);
            let rhs = DVector::from_fn(free.len(), |a, _| g[free[a]] - hp[free[a]]);
            let Some(sol) = hff.lu().solve(&rhs) else { continue };
            for (a, &i) in free.iter().enumerate() {
                p[i] = sol[a];
            }
        }
        let mu = g - h * &p;
        let tol = 1e-9 * (g.amax() + b);
        let kkt = (0..n).all(|i| match state[i] {
            0 => p[i].abs() <= b * (1.0 + 1e-9),
            s => s as f64 * mu[i] >= -tol,
        });
        if kkt {
            let f = 0.5 * p.dot(&(h * &p)) - g.dot(&p);
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((f, p));
            }
        }
    }
    best.expect("KKT point exists").1
}

fn c4_dual_certification() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_gap = 0.0f64;
    let mut worst_weak = 0.0f64;
    for _ in 0..25 {
        let n = rng.random_range(8..=128);
        let alpha = 10f64.powf(rng.random_range(-4.0..0.0));
        let grid = Grid::new(n).unwrap();
        let op = KernelOperator::assemble(grid);
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut g = op.apply(&Signal::new(grid, u).unwrap()).unwrap().into_values();
        for v in g.iter_mut() {
            if rng.random_range(0.0..1.0) < 0.2 {
                *v += rng.random_range(-1.0..1.0);
            }
        }
        let g = Signal::new(grid, g).unwrap();
        let res = solve_l1_dual(&op, &g, &SolveConfig::l1(alpha)).unwrap();
        worst_gap = worst_gap.max(res.relative_gap.unwrap());
        // Weak duality from independently computed objectives.
        let a = kernel_matrix(n);
        let gv = DVector::from_column_slice(g.values());
        let uv = DVector::from_column_slice(res.u.values());
        let pv = DVector::from_column_slice(res.p.as_ref().unwrap().values());
        let w = 1.0 / n as f64;
        let primal = w * (&a * &uv - &gv).abs().sum() / alpha + 0.5 * w * uv.norm_squared();
        let atp = a.transpose() * &pv;
        let dual = -0.5 * w * atp.norm_squared() + w * pv.dot(&gv);
        worst_weak = worst_weak.max(dual - primal);
    }

    let n = 8;
    let a = kernel_matrix(n);
    let h = &a * a.transpose();
    let grid = Grid::new(n).unwrap();
    let op = KernelOperator::assemble(grid);
    let mut worst_oracle = 0.0f64;
    for alpha in [1e-3, 0.05, 1.0] {
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-0.2..0.2)).collect();
        let p_star = box_qp_oracle(&h, &DVector::from_column_slice(&g), 1.0 / alpha);
        let u_star = a.transpose() * p_star;
        let res = solve_l1_dual(&op, &Signal::new(grid, g).unwrap(), &SolveConfig::l1(alpha)).unwrap();
        let diff = DVector::from_column_slice(res.u.values()) - u_star;
        worst_oracle = worst_oracle.max((diff.norm_squared() / n as f64).sqrt());
    }
    outcome(
        worst_gap <= 1e-8 && worst_weak <= 1e-10 && worst_oracle <= 1e-4,
        format!("max rel. gap {worst_gap:.1e}, max D-P {worst_weak:.1e}, n=8 oracle L2 diff {worst_oracle:.1e}"),
    )
}

fn c5_exact_penalization() -> Outcome {
    let grid = Grid::new(200).unwrap();
    let op = KernelOperator::assemble(grid);
    let problem = make_test_problem("benchmark_omega_one", grid).unwrap();
    let g = problem.g_dag_discrete(&op).unwrap();
    let err = |alpha: f64| {
        let r = solve_l1_dual(&op, &g, &SolveConfig::l1(alpha)).unwrap();
        bregman_error(&r.u, &problem.u_dag).unwrap()
    };
    let below: Vec<f64> = [0.05, 0.2, 0.4].iter().map(|&a| err(a)).collect();
    let above = err(5.0);
    let worst = below.iter().copied().fold(0.0, f64::max);
    outcome(
        worst <= 1e-10 && above >= 1e-4,
        format!("max error below threshold {worst:.1e}, error at alpha=5 {above:.2e}"),
    )
}

fn c6_scale_robustness() -> Outcome {
    let rows = scale_robustness_experiment("sine_1", 200, 0.05, &[1.0, 10.0, 100.0], 6, &AlphaGrid::default()).unwrap();
    let l1: Vec<f64> = rows.iter().map(|r| r.l1_error).collect();
    let l2: Vec<f64> = rows.iter().map(|r| r.l2_error).collect();
    let (lo, hi) = l1.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let spread = hi / lo - 1.0;
    let increasing = l2.windows(2).all(|w| w[1] > w[0]);
    let show = |v: &[f64]| v.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(" ");
    outcome(
        spread <= 0.15 && increasing,
        format!("L1 errors [{}] (spread {:.1}%), L2 errors [{}]", show(&l1), 100.0 * spread, show(&l2)),
    )
}

fn c7_l1_vs_l2() -> Outcome {
    let seeds: Vec<u64> = (0..10).map(|k| 700 + k).collect();
    let grid_spec = AlphaGrid::default();
    let sp = compare_fidelities("sine_1", 200, NoiseKind::SaltPepper, 0.05, 1.0, &seeds, &grid_spec).unwrap();
    let ga = compare_fidelities("sine_1", 200, NoiseKind::Gaussian, 0.05, 1.0, &seeds, &grid_spec).unwrap();
    outcome(
        sp.mean_l1 < 0.5 * sp.mean_l2 && ga.mean_l2 <= 1.2 * ga.mean_l1,
        format!(
            "salt-pepper L1 {:.3e} vs L2 {:.3e}; gaussian L1 {:.3e} vs L2 {:.3e}",
            sp.mean_l1, sp.mean_l2, ga.mean_l1, ga.mean_l2
        ),
    )
}

struct RatesRun {
    dir: tempfile::TempDir,
}

fn rates_args(dir: &std::path::Path) -> RatesArgs {
    RatesArgs {
        config: None,
        overrides: Vec::new(),
        seed: None,
        out: dir.to_path_buf(),
    }
}

fn c8_rate_slope(run: &mut Option<RatesRun>) -> Outcome {
    let grid = Grid::new(200).unwrap();
    let op = KernelOperator::assemble(grid);
    let problem = make_test_problem("sine_1", grid).unwrap();
    let fit = estimate_phi(&op, &problem, &AlphaGrid::default().values()).unwrap();
    let kappa = fit.kappa;
    let gamma = 5.0;
    let dir = tempfile::tempdir().unwrap();
    let results = cmd_rates(&rates_args(dir.path()), &["rates".into()]).unwrap();
    *run = Some(RatesRun { dir });
    let s = &results[0].summary;
    let rows = results[0].records.len();
    let breg_target = kappa * gamma / (2.0 - kappa);
    let res_target = gamma / (2.0 - kappa);
    let breg_dev = (s.bregman.slope - breg_target).abs() / breg_target;
    let res_dev = (s.residual.slope - res_target).abs() / res_target;
    outcome(
        rows == 120 && s.kappa == kappa && breg_dev <= 0.25 && res_dev <= 0.25,
        format!(
            "kappa_est {kappa} (linear: {}), bregman slope {:.3}±{:.3} vs {breg_target:.3} ({:.1}%), residual slope {:.3}±{:.3} vs {res_target:.3} ({:.1}%), {rows} rows",
            fit.linear,
            s.bregman.slope,
            s.bregman.half_width,
            100.0 * breg_dev,
            s.residual.slope,
            s.residual.half_width,
            100.0 * res_dev
        ),
    )
}

fn c9_fenchel_round_trip() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for kappa in [0.25, 0.5, 0.75] {
        let phi = IndexFunction::power(1.0, kappa).unwrap();
        let samples: Vec<(f64, f64)> =
            AlphaGrid::default().values().into_iter().map(|a| (a, psi(&phi, a).unwrap())).collect();
        let est = phi_from_psi(&samples, &default_t_grid(&samples, 60)).unwrap();
        let rel = (est.kappa - kappa).abs() / kappa;
        pass &= rel <= 0.05;
        details.push(format!("{kappa}->{:.4}", est.kappa));
    }
    outcome(pass, details.join(", "))
}

fn c10_determinism(run: &Option<RatesRun>) -> Outcome {
    let Some(first) = run else {
        return outcome(false, "no first run available".into());
    };
    let dir = tempfile::tempdir().unwrap();
    if let Err(e) = cmd_rates(&rates_args(dir.path()), &["rates".into()]) {
        return outcome(false, format!("second run failed: {e}"));
    }
    let same = ["trials.csv", "summary.csv"].iter().all(|f| {
        let a = fs::read(first.dir.path().join(f)).unwrap();
        let b = fs::read(dir.path().join(f)).unwrap();
        a == b
    });
    outcome(same, format!("trials.csv and summary.csv identical: {same}"))
}

fn main() {
    let mut rates: Option<RatesRun> = None;
    type Check<'a> = (usize, Duration, Box<dyn FnMut() -> Outcome + 'a>);
    let mut results = Vec::new();
    {
        let rates_ref = &mut rates;
        let checks: Vec<Check> = vec![
            (1, Duration::from_secs(1), Box::new(c1_operator_order)),
            (2, Duration::from_secs(5), Box::new(c2_profile_oracle)),
            (3, Duration::from_secs(1), Box::new(c3_pure_impulse)),
            (4, Duration::from_secs(60), Box::new(c4_dual_certification)),
            (5, Duration::from_secs(10), Box::new(c5_exact_penalization)),
            (6, Duration::from_secs(120), Box::new(c6_scale_robustness)),
            (7, Duration::from_secs(120), Box::new(c7_l1_vs_l2)),
            (8, Duration::from_secs(600), Box::new(move || c8_rate_slope(rates_ref))),
            (9, Duration::from_secs(5), Box::new(c9_fenchel_round_trip)),
        ];
        for (id, limit, mut check) in checks {
            let start = Instant::now();
            let out = check();
            results.push((id, limit, start.elapsed(), out));
        }
    }
    let start = Instant::now();
    let out = c10_determinism(&rates);
    results.push((10, Duration::MAX, start.elapsed(), out));

    let mut failed = 0;
    for (id, limit, elapsed, out) in &results {
        let in_time = elapsed <= limit;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        let limit_text = if *limit == Duration::MAX {
            String::new()
        } else {
            format!(" (limit {:.0}s)", limit.as_secs_f64())
        };
        println!(
            "criterion {id:2}: {} [{:.2}s{limit_text}] {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            out.detail
        );
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
