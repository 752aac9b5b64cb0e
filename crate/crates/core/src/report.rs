//! Text formats: the flat `key = value` experiment config and the CSV,
//! summary and gnuplot files written by rate experiments.
//!
//! Config keys (all optional, defaults from [`ExperimentConfig::default`]):
//!
//! ```text
//! # comment
//! problem = sine_1
//! n = 200
//! eta0_base = 0.8
//! i_min = 1
//! i_max = 12
//! trials = 10
//! s = 1
//! fidelity = l1            # l1 | l2 | both
//! alpha_min = 1e-6
//! alpha_max = 1
//! alpha_count = 49
//! master_seed = 20250101
//! kappa = 0.5              # omit to estimate
//! gap_tol = 1e-8
//! max_iter = 50000
//! ```
//!
//! Floats are written with Rust's shortest round-trip `{:e}` formatting, so
//! files are byte-reproducible and parse back to identical values.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::experiments::{ExperimentConfig, RateSummary, TrialRecord};

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value `{value}` for key `{key}`")))
}

/// Applies one `key = value` setting.
pub fn apply_setting(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    let v = value.trim();
    match key.trim() {
        "problem" => cfg.problem = v.to_string(),
        "n" => cfg.n = parse_value(key, v)?,
        "eta0_base" => cfg.eta0_base = parse_value(key, v)?,
        "i_min" => cfg.i_min = parse_value(key, v)?,
        "i_max" => cfg.i_max = parse_value(key, v)?,
        "trials" => cfg.trials = parse_value(key, v)?,
        "s" => cfg.s = parse_value(key, v)?,
        "fidelity" => cfg.fidelity = v.parse()?,
        "alpha_min" => cfg.alpha_grid.min = parse_value(key, v)?,
        "alpha_max" => cfg.alpha_grid.max = parse_value(key, v)?,
        "alpha_count" => cfg.alpha_grid.count = parse_value(key, v)?,
        "master_seed" => cfg.master_seed = parse_value(key, v)?,
        "kappa" => {
            cfg.kappa = match v {
                "" | "auto" | "none" => None,
                _ => Some(parse_value(key, v)?),
            }
        }
        "gap_tol" => cfg.gap_tol = parse_value(key, v)?,
        "max_iter" => cfg.max_iter = parse_value(key, v)?,
        other => return invalid(format!("unknown config key `{other}`")),
    }
    Ok(())
}

/// Parses a config file body on top of the defaults. The result is validated.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return invalid(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1));
        };
        apply_setting(&mut cfg, key, value).map_err(|e| Error::InvalidArgument(format!("line {}: {e}", lineno + 1)))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes every field; `parse_config(write_config(c)) == c`.
pub fn write_config(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "problem = {}", cfg.problem);
    let _ = writeln!(s, "n = {}", cfg.n);
    let _ = writeln!(s, "eta0_base = {:e}", cfg.eta0_base);
    let _ = writeln!(s, "i_min = {}", cfg.i_min);
    let _ = writeln!(s, "i_max = {}", cfg.i_max);
    let _ = writeln!(s, "trials = {}", cfg.trials);
    let _ = writeln!(s, "s = {:e}", cfg.s);
    let _ = writeln!(s, "fidelity = {}", cfg.fidelity);
    let _ = writeln!(s, "alpha_min = {:e}", cfg.alpha_grid.min);
    let _ = writeln!(s, "alpha_max = {:e}", cfg.alpha_grid.max);
    let _ = writeln!(s, "alpha_count = {}", cfg.alpha_grid.count);
    let _ = writeln!(s, "master_seed = {}", cfg.master_seed);
    match cfg.kappa {
        Some(k) => {
            let _ = writeln!(s, "kappa = {k:e}");
        }
        None => {
            let _ = writeln!(s, "kappa = auto");
        }
    }
    let _ = writeln!(s, "gap_tol = {:e}", cfg.gap_tol);
    let _ = writeln!(s, "max_iter = {}", cfg.max_iter);
    s
}

pub const TRIALS_HEADER: &str = "eta0,trial,seed,alpha_opt,bregman_error,l1_residual,l2_error,gap,converged";
pub const SUMMARY_HEADER: &str = "eta0,mean_bregman,sd_bregman,mean_residual,sd_residual,bound_value";

/// `L²` rows carry a gap of zero.
pub fn trials_csv(records: &[TrialRecord]) -> String {
    let mut s = String::from(TRIALS_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{:e},{},{},{:e},{:e},{:e},{:e},{:e},{}",
            r.eta0,
            r.trial,
            r.seed,
            r.alpha_opt,
            r.bregman_error,
            r.l1_residual,
            r.l2_error,
            r.gap.unwrap_or(0.0),
            r.converged
        );
    }
    s
}

pub fn summary_csv(summary: &RateSummary) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for l in &summary.levels {
        let _ = writeln!(
            s,
            "{:e},{:e},{:e},{:e},{:e},{:e}",
            l.eta0, l.mean_bregman, l.sd_bregman, l.mean_residual, l.sd_residual, l.bound_value
        );
    }
    s
}

pub fn fit_text(summary: &RateSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "fidelity = {}", summary.fidelity);
    let _ = writeln!(s, "kappa = {:e}", summary.kappa);
    let _ = writeln!(s, "gamma = {:e}", summary.gamma);
    for (name, fit, floor) in [
        ("bregman", &summary.bregman, summary.floor_bregman),
        ("residual", &summary.residual, summary.floor_residual),
    ] {
        let _ = writeln!(s, "{name}_slope = {:e}", fit.slope);
        let _ = writeln!(s, "{name}_slope_half_width = {:e}", fit.half_width);
        let _ = writeln!(s, "{name}_theoretical_exponent = {:e}", fit.theoretical);
        let _ = writeln!(s, "{name}_constant = {:e}", fit.constant);
        let _ = writeln!(s, "{name}_noise_free_floor = {:e}", floor);
        let used: Vec<String> = fit.levels_used.iter().map(|l| l.to_string()).collect();
        let _ = writeln!(s, "{name}_levels_used = {}", used.join(" "));
    }
    s
}

/// Whitespace-separated columns: measured means and the fitted and
/// theoretical power laws `C η₀^slope`, `C η₀^exponent`.
pub fn gnuplot_data(summary: &RateSummary) -> String {
    let mut s = String::from(
        "# eta0 mean_bregman sd_bregman fit_bregman theory_bregman mean_residual sd_residual fit_residual theory_residual\n",
    );
    let b = &summary.bregman;
    let r = &summary.residual;
    for l in &summary.levels {
        let _ = writeln!(
            s,
            "{:e} {:e} {:e} {:e} {:e} {:e} {:e} {:e} {:e}",
            l.eta0,
            l.mean_bregman,
            l.sd_bregman,
            b.constant * l.eta0.powf(b.slope),
            b.constant * l.eta0.powf(b.theoretical),
            l.mean_residual,
            l.sd_residual,
            r.constant * l.eta0.powf(r.slope),
            r.constant * l.eta0.powf(r.theoretical),
        );
    }
    s
}

/// Two-column numeric table with a `#` header line.
pub fn table(header: &str, rows: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut s = format!("# {header}\n");
    for (a, b) in rows {
        let _ = writeln!(s, "{a:e} {b:e}");
    }
    s
}
