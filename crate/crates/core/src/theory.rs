//! Error-bound and rate calculus for `L¹`-Tikhonov under impulsive noise.
//!
//! Smoothness of `u†` enters through a concave index function `φ` and the
//! approximation-error function `ψ(α) = (−φ)*(−1/α)`, where
//! `(−φ)*(s) = sup_{τ≥0} (sτ + φ(τ))`. For `φ(t) = c t^κ` with `κ < 1`,
//!
//! ```text
//! ψ(α) = C α^{κ/(1−κ)},   C = c^{1/(1−κ)} (κ^{κ/(1−κ)} − κ^{1/(1−κ)}),
//! ```
//!
//! and for `κ = 1` (benchmark source condition) `ψ` jumps from `0` to `+∞` at
//! `α = 1/c`. Infinite values are returned as `f64::INFINITY`.
//!
//! The constants `β`, `C_err` and `C_ψ` have no computable values; they are
//! caller-supplied and default to one. The smallness condition `η < η₀` under
//! which the bounds hold is not checked.

use crate::error::{invalid, Error, Result};

/// Concave index function `φ` with `φ(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum IndexFunction {
    Power { c: f64, kappa: f64 },
    /// Piecewise-linear through `(t, φ(t))`, starting at `(0, 0)`.
    Sampled(Vec<(f64, f64)>),
}

impl IndexFunction {
    pub fn power(c: f64, kappa: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return invalid(format!("coefficient c must be positive, got {c}"));
        }
        if !(kappa > 0.0 && kappa <= 1.0) {
            return invalid(format!("kappa must lie in (0, 1], got {kappa}"));
        }
        Ok(IndexFunction::Power { c, kappa })
    }

    /// Builds a sampled index function. Points are sorted, `(0, 0)` is
    /// prepended when missing, and slopes are projected onto nonincreasing
    /// nonnegative sequences (weighted by interval length) so the result is a
    /// concave, nondecreasing interpolant. Returns whether the data had to be
    /// adjusted.
    pub fn sampled(points: &[(f64, f64)]) -> Result<(Self, bool)> {
        if points.is_empty() {
            return invalid("sampled index function needs at least one point");
        }
        let mut pts: Vec<(f64, f64)> = points.to_vec();
        if pts.iter().any(|(t, v)| !t.is_finite() || !v.is_finite() || *t < 0.0) {
            return invalid("sampled index function needs finite points with t >= 0");
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.dedup_by(|a, b| a.0 == b.0);
        let mut adjusted = false;
        if pts[0].0 == 0.0 {
            if pts[0].1 != 0.0 {
                adjusted = true;
            }
            pts.remove(0);
        }
        if pts.is_empty() {
            return Ok((IndexFunction::Sampled(vec![(0.0, 0.0)]), adjusted));
        }
        let mut knots = vec![(0.0, 0.0)];
        knots.extend(pts);
        let widths: Vec<f64> = knots.windows(2).map(|w| w[1].0 - w[0].0).collect();
        let raw: Vec<f64> = knots
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        let slopes = antitone_projection(&raw, &widths);
        let slopes: Vec<f64> = slopes.into_iter().map(|s| s.max(0.0)).collect();
        let mut value = 0.0;
        let mut out = vec![(0.0, 0.0)];
        for (k, (&s, &w)) in slopes.iter().zip(&widths).enumerate() {
            value += s * w;
            let (t, orig) = knots[k + 1];
            if (value - orig).abs() > 1e-12 * orig.abs().max(1.0) {
                adjusted = true;
            }
            out.push((t, value));
        }
        if adjusted {
            log::warn!("sampled index function adjusted to be concave and nondecreasing");
        }
        Ok((IndexFunction::Sampled(out), adjusted))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            IndexFunction::Power { c, kappa } => c * t.max(0.0).powf(*kappa),
            IndexFunction::Sampled(pts) => interpolate(pts, t),
        }
    }

    /// Exponent `κ` of a power function.
    pub fn kappa(&self) -> Option<f64> {
        match self {
            IndexFunction::Power { kappa, .. } => Some(*kappa),
            IndexFunction::Sampled(_) => None,
        }
    }
}

fn interpolate(pts: &[(f64, f64)], t: f64) -> f64 {
    if t <= pts[0].0 {
        return pts[0].1;
    }
    match pts.iter().position(|&(x, _)| x >= t) {
        Some(k) => {
            let (x0, y0) = pts[k - 1];
            let (x1, y1) = pts[k];
            y0 + (y1 - y0) * (t - x0) / (x1 - x0)
        }
        None => pts[pts.len() - 1].1,
    }
}

/// Weighted least-squares projection onto nonincreasing sequences
/// (pool adjacent violators).
fn antitone_projection(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new();
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (v2, w2, c2) = blocks[blocks.len() - 1];
            let (v1, w1, c1) = blocks[blocks.len() - 2];
            if v1 >= v2 {
                break;
            }
            blocks.pop();
            let last = blocks.last_mut().unwrap();
            *last = ((v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2, c1 + c2);
        }
    }
    blocks.into_iter().flat_map(|(v, _, c)| std::iter::repeat_n(v, c)).collect()
}

/// Parameters of the error bounds. `gamma` is derived from `(k, p, d, q′)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    pub k: f64,
    /// Integrability exponent; `f64::INFINITY` allowed.
    pub p: f64,
    pub d: f64,
    pub q_prime: f64,
    pub beta: f64,
    pub c_err: f64,
    pub c_psi: f64,
    /// Fidelity exponent, fixed to one for `L¹`.
    pub r: f64,
    pub gamma: f64,
}

impl RateParams {
    pub fn new(k: f64, p: f64, d: f64, q_prime: f64) -> Result<Self> {
        Ok(Self {
            k,
            p,
            d,
            q_prime,
            beta: 1.0,
            c_err: 1.0,
            c_psi: 1.0,
            r: 1.0,
            gamma: gamma_exponent(k, p, d, q_prime)?,
        })
    }

    /// `k = 2, p = 2, d = 1, q′ = 2`, so `γ = 5`.
    pub fn green_kernel() -> Self {
        Self::new(2.0, 2.0, 1.0, 2.0).expect("valid constants")
    }

    pub fn with_constants(mut self, beta: f64, c_err: f64, c_psi: f64) -> Result<Self> {
        if !(beta > 0.0 && c_err >= 1.0 && c_psi > 0.0) {
            return invalid("need beta > 0, C_err >= 1 and C_psi > 0");
        }
        self.beta = beta;
        self.c_err = c_err;
        self.c_psi = c_psi;
        Ok(self)
    }
}

/// `γ = q′(k/d + (p − 1)/p)` with `(p − 1)/p = 1` for `p = ∞`.
pub fn gamma_exponent(k: f64, p: f64, d: f64, q_prime: f64) -> Result<f64> {
    if !(d >= 1.0) || !(q_prime > 1.0) || !(k >= 0.0) || !(p >= 1.0) {
        return invalid(format!("need k >= 0, p >= 1, d >= 1, q' > 1; got k={k} p={p} d={d} q'={q_prime}"));
    }
    let infinite = p.is_infinite();
    if !(k > d / p || (k == 0.0 && infinite) || (infinite && k >= 0.0)) {
        return invalid(format!("k = {k} must exceed d/p = {}", d / p));
    }
    let tail = if infinite { 1.0 } else { (p - 1.0) / p };
    Ok(q_prime * (k / d + tail))
}

/// Constant `C` in `ψ(α) = C α^{κ/(1−κ)}` for `φ(t) = c t^κ`, `κ < 1`.
pub fn power_psi_constant(c: f64, kappa: f64) -> f64 {
    let e = 1.0 / (1.0 - kappa);
    c.powf(e) * (kappa.powf(kappa * e) - kappa.powf(e))
}

/// `ψ(α) = sup_{τ≥0} (φ(τ) − τ/α)`.
pub fn psi(phi: &IndexFunction, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return invalid(format!("alpha must be positive, got {alpha}"));
    }
    Ok(match phi {
        IndexFunction::Power { c, kappa } if *kappa >= 1.0 => {
            if alpha <= 1.0 / c {
                0.0
            } else {
                f64::INFINITY
            }
        }
        IndexFunction::Power { c, kappa } => power_psi_constant(*c, *kappa) * alpha.powf(kappa / (1.0 - kappa)),
        IndexFunction::Sampled(pts) => fenchel_sup(pts, -1.0 / alpha),
    })
}

fn fenchel_sup(pts: &[(f64, f64)], s: f64) -> f64 {
    pts.iter().fold(0.0f64, |m, &(t, v)| m.max(s * t + v))
}

/// `θ(α) = α ψ(α)`, extended by `θ(0) = 0`.
pub fn theta(phi: &IndexFunction, alpha: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(0.0);
    }
    Ok(alpha * psi(phi, alpha)?)
}

/// `θ̃(α) = α^{q′} ψ(α)`, extended by `θ̃(0) = 0`.
pub fn theta_tilde(phi: &IndexFunction, alpha: f64, q_prime: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(0.0);
    }
    Ok(alpha.powf(q_prime) * psi(phi, alpha)?)
}

/// Bisection for `f(x) = y` on `[lo, hi]` with `f` continuous and
/// nondecreasing, to `|f(x) − y| ≤ 1e−12 max(1, |y|)`.
pub fn invert_monotone(f: impl Fn(f64) -> f64, y: f64, bracket: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo <= hi) {
        return invalid(format!("bad bracket [{lo}, {hi}]"));
    }
    let (flo, fhi) = (f(lo), f(hi));
    if !(y >= flo && y <= fhi) {
        return invalid(format!("target {y} outside range [{flo}, {fhi}]"));
    }
    let tol = 1e-12 * y.abs().max(1.0);
    if (flo - y).abs() <= tol {
        return Ok(lo);
    }
    if (fhi - y).abs() <= tol {
        return Ok(hi);
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let v = f(mid);
        if (v - y).abs() <= tol {
            return Ok(mid);
        }
        if v < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Inverts a nondecreasing function on `[0, ∞)`, doubling the upper end of
/// the bracket until it covers `y`.
fn invert_on_half_line(f: impl Fn(f64) -> f64, y: f64) -> Result<f64> {
    let mut hi = 1.0;
    for _ in 0..2000 {
        let v = f(hi);
        if v >= y {
            return invert_monotone(&f, y, (0.0, hi));
        }
        if !v.is_finite() {
            break;
        }
        hi *= 2.0;
    }
    Err(Error::InvalidArgument(format!("cannot invert: target {y} not attained")))
}

/// A-priori choice `α = errbound^{1−κ} / (c κ r^κ C_err^κ)`.
pub fn apriori_alpha_power(c: f64, kappa: f64, r: f64, c_err: f64, errbound: f64) -> Result<f64> {
    if !(c > 0.0 && r > 0.0 && c_err > 0.0 && errbound > 0.0) || !(kappa > 0.0 && kappa <= 1.0) {
        return invalid("apriori_alpha_power needs positive arguments and kappa in (0, 1]");
    }
    Ok(errbound.powf(1.0 - kappa) / (c * kappa * r.powf(kappa) * c_err.powf(kappa)))
}

/// `α = θ⁻¹(ε) + θ̃⁻¹(η^γ)`.
pub fn alpha_choice_case1(phi: &IndexFunction, q_prime: f64, epsilon: f64, eta: f64, gamma: f64) -> Result<f64> {
    if matches!(phi, IndexFunction::Power { kappa, .. } if *kappa >= 1.0) {
        return invalid("kappa = 1 has no case-1 parameter choice; use alpha <= 1/(2 C_err c)");
    }
    if !(epsilon >= 0.0 && eta >= 0.0) {
        return invalid("epsilon and eta must be nonnegative");
    }
    if epsilon == 0.0 && eta == 0.0 {
        return invalid("noise-free data: no case-1 parameter choice");
    }
    let mut alpha = 0.0;
    if epsilon > 0.0 {
        alpha += invert_on_half_line(|a| theta(phi, a).unwrap_or(f64::INFINITY), epsilon)?;
    }
    if eta > 0.0 {
        let target = eta.powf(gamma);
        alpha += invert_on_half_line(|a| theta_tilde(phi, a, q_prime).unwrap_or(f64::INFINITY), target)?;
    }
    Ok(alpha)
}

/// Bregman-distance bound
/// `[2q′ε/α + (q′−1) η^γ/α^{q′} + C_ψ ψ(C_err α)] / β`.
pub fn bound_bregman(params: &RateParams, phi: &IndexFunction, epsilon: f64, eta: f64, alpha: f64) -> Result<f64> {
    let q = params.q_prime;
    let data = 2.0 * q * epsilon / alpha + (q - 1.0) * eta.powf(params.gamma) / alpha.powf(q);
    let approx = params.c_psi * psi(phi, params.c_err * alpha)?;
    Ok((data + approx) / params.beta)
}

/// `L¹` residual bound
/// `4q′ε + 2(q′−1) η^γ/α^{q′−1} + 2 C_ψ C_err α ψ(2 C_err α)`.
pub fn bound_residual(params: &RateParams, phi: &IndexFunction, epsilon: f64, eta: f64, alpha: f64) -> Result<f64> {
    let q = params.q_prime;
    let psi_term = psi(phi, 2.0 * params.c_err * alpha)?;
    let approx = if psi_term == 0.0 {
        0.0
    } else {
        2.0 * params.c_psi * params.c_err * alpha * psi_term
    };
    Ok(4.0 * q * epsilon + 2.0 * (q - 1.0) * eta.powf(params.gamma) / alpha.powf(q - 1.0) + approx)
}

/// Rate exponents for `φ(t) = c t^κ`, `κ < 1`, `q = q′ = 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateExponents {
    pub breg_eps: f64,
    pub breg_eta: f64,
    pub res_eps: f64,
    pub res_eta: f64,
}

pub fn rate_exponents_power(kappa: f64, gamma: f64) -> Result<RateExponents> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return invalid(format!(
            "kappa = {kappa}: power rates need kappa in (0, 1); kappa = 1 gives O(eps + eta^gamma)"
        ));
    }
    if !(gamma > 0.0) {
        return invalid("gamma must be positive");
    }
    Ok(RateExponents {
        breg_eps: kappa,
        breg_eta: kappa * gamma / (2.0 - kappa),
        res_eps: 1.0,
        res_eta: gamma / (2.0 - kappa),
    })
}

/// Exponents in `η` including the linear case `κ = 1`, where both rates are `η^γ`.
pub fn eta_exponents(kappa: f64, gamma: f64) -> Result<(f64, f64)> {
    if kappa == 1.0 {
        return Ok((gamma, gamma));
    }
    let r = rate_exponents_power(kappa, gamma)?;
    Ok((r.breg_eta, r.res_eta))
}

/// Bound magnitudes for purely impulsive noise of height `s/η₀` on a set of
/// measure `η₀` (constants dropped).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1 {
    pub l2_breg: f64,
    pub l1_std_breg: f64,
    pub l1_new_breg: f64,
    pub l2_res: f64,
    pub l1_std_res: f64,
    pub l1_new_res: f64,
}

impl Table1 {
    /// Standard over new `L¹` Bregman bound.
    pub fn improvement(&self) -> f64 {
        self.l1_std_breg / self.l1_new_breg
    }
}

pub fn table1_comparison(s: f64, eta0: f64, kappa: f64, kappa_tilde: f64, gamma: f64) -> Result<Table1> {
    if !(s > 0.0 && eta0 > 0.0 && gamma > 0.0) {
        return invalid("s, eta0 and gamma must be positive");
    }
    if !(kappa > 0.0 && kappa < 1.0 && kappa_tilde > 0.0 && kappa_tilde < 1.0) {
        return invalid("kappa and kappa_tilde must lie in (0, 1)");
    }
    Ok(Table1 {
        l2_breg: s.powf(2.0 * kappa_tilde) / eta0.powf(kappa_tilde),
        l1_std_breg: s.powf(kappa),
        l1_new_breg: eta0.powf(kappa * gamma / (2.0 - kappa)).min(s.powf(kappa)),
        l2_res: s / eta0.sqrt(),
        l1_std_res: s,
        l1_new_res: eta0.powf(gamma / (2.0 - kappa)).min(s),
    })
}

/// `(−φ)*(s) = max_k (s t_k + φ(t_k))` over samples, for `s < 0`.
pub fn fenchel_conjugate_numeric(samples: &[(f64, f64)], s: f64) -> Result<f64> {
    if !(s < 0.0) {
        return invalid(format!("conjugate is infinite for s >= 0 (s = {s})"));
    }
    if samples.is_empty() {
        return invalid("no samples");
    }
    Ok(samples.iter().fold(f64::NEG_INFINITY, |m, &(t, v)| m.max(s * t + v)))
}

/// Index function recovered from approximation-error samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiEstimate {
    /// `φ_est(t) = min_k (ψ_k + t/α_k)` on the requested `t` grid.
    pub envelope: Vec<(f64, f64)>,
    pub c: f64,
    pub kappa: f64,
    /// Root-mean-square residual of the log-log fit.
    pub fit_residual: f64,
    /// Set when every `ψ_k` vanishes; the envelope is then reported as zero
    /// and no fit is attempted.
    pub degenerate: bool,
}

impl PhiEstimate {
    pub fn index_function(&self) -> IndexFunction {
        IndexFunction::Sampled(self.envelope.clone())
    }
}

/// Log-spaced `t` grid between the first and last kinks of the envelope
/// `min_k (ψ_k + t/α_k)`.
pub fn default_t_grid(samples: &[(f64, f64)], count: usize) -> Vec<f64> {
    let mut s: Vec<(f64, f64)> = samples.to_vec();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    let kinks: Vec<f64> = s
        .windows(2)
        .filter_map(|w| {
            let ((a0, p0), (a1, p1)) = (w[0], w[1]);
            let t = (p1 - p0) / (1.0 / a0 - 1.0 / a1);
            (t > 0.0 && t.is_finite()).then_some(t)
        })
        .collect();
    let lo = kinks.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = kinks.iter().copied().fold(0.0, f64::max);
    if !(lo < hi) || count < 2 {
        return Vec::new();
    }
    log_space(lo, hi, count)
}

pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Concave biconjugate envelope of `(α_k, ψ_k)` samples followed by a
/// least-squares fit of `log φ_est` against `log t`.
pub fn phi_from_psi(samples: &[(f64, f64)], t_grid: &[f64]) -> Result<PhiEstimate> {
    if samples.len() < 3 {
        return invalid("need at least three (alpha, psi) samples");
    }
    if samples.iter().any(|&(a, p)| !(a > 0.0) || !(p >= 0.0) || !p.is_finite()) {
        return invalid("samples need alpha > 0 and finite psi >= 0");
    }
    if samples.iter().all(|&(_, p)| p == 0.0) {
        return Ok(PhiEstimate {
            envelope: t_grid.iter().map(|&t| (t, 0.0)).collect(),
            c: 0.0,
            kappa: 1.0,
            fit_residual: 0.0,
            degenerate: true,
        });
    }
    if t_grid.len() < 2 || t_grid.iter().any(|&t| !(t > 0.0)) {
        return invalid("t grid needs at least two positive points");
    }
    let envelope: Vec<(f64, f64)> = t_grid
        .iter()
        .map(|&t| {
            let v = samples.iter().fold(f64::INFINITY, |m, &(a, p)| m.min(p + t / a));
            (t, v)
        })
        .collect();
    let pts: Vec<(f64, f64)> = envelope
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|&(t, v)| (t.ln(), v.ln()))
        .collect();
    let fit = linear_fit(&pts).ok_or_else(|| Error::InvalidArgument("degenerate log-log fit".into()))?;
    Ok(PhiEstimate {
        envelope,
        c: fit.intercept.exp(),
        kappa: fit.slope,
        fit_residual: fit.rms,
        degenerate: false,
    })
}

/// Ordinary least squares `y ≈ intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms: f64,
    /// Standard error of the slope (zero for two points).
    pub slope_se: f64,
}

pub fn linear_fit(pts: &[(f64, f64)]) -> Option<LinearFit> {
    let m = pts.len();
    if m < 2 {
        return None;
    }
    let mf = m as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / mf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let slope_se = if m > 2 { (sse / (mf - 2.0) / sxx).sqrt() } else { 0.0 };
    Some(LinearFit {
        slope,
        intercept,
        rms: (sse / mf).sqrt(),
        slope_se,
    })
}
