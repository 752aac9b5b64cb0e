//! Impulsive and Gaussian noise, and the impulsiveness profile
//!
//! ```text
//! ε_ξ(η) = inf { ‖ξ‖_{L¹(Ω∖C)} : |C| ≤ η }
//! ```
//!
//! On a grid every point carries measure `1/n`, so the infimum at `η = j/n`
//! removes the `j` largest magnitudes. Between breakpoints the profile is
//! linearly interpolated, which corresponds to excising a part of one cell.
//!
//! Stream order of the impulse generators: `m` index draws by partial
//! Fisher–Yates (`random_range(k..n)` for `k = 0..m`), then `m` sign draws
//! (`random::<bool>()`, `true` meaning `+`) in the order the indices were drawn.
//! The pure-impulse generator skips the sign draws.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::mesh::{norm, Grid, Norm, Signal};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    SaltPepper,
    PureImpulse,
    Gaussian,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::SaltPepper => "salt_pepper",
            NoiseKind::PureImpulse => "pure_impulse",
            NoiseKind::Gaussian => "gaussian",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "salt_pepper" | "salt-pepper" => Ok(NoiseKind::SaltPepper),
            "pure_impulse" | "pure" => Ok(NoiseKind::PureImpulse),
            "gaussian" => Ok(NoiseKind::Gaussian),
            _ => invalid(format!("unknown noise kind `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseParams {
    pub eta0: f64,
    pub s: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    pub xi: Signal,
    pub seed: u64,
    pub kind: NoiseKind,
    pub params: NoiseParams,
}

/// Number of impulse carriers, `⌈η₀ n⌉`. Products that land within rounding
/// of an integer are not pushed to the next one.
pub fn carrier_count(eta0: f64, n: usize) -> usize {
    let x = eta0 * n as f64;
    let r = x.round();
    let m = if (x - r).abs() <= 1e-9 * x.max(1.0) { r } else { x.ceil() };
    (m as usize).clamp(1, n)
}

fn check_impulse_params(eta0: f64, s: f64) -> Result<()> {
    if !(eta0 > 0.0 && eta0 <= 1.0) {
        return invalid(format!("eta0 must lie in (0, 1], got {eta0}"));
    }
    if !(s.is_finite() && s >= 0.0) {
        return invalid(format!("amplitude s must be finite and nonnegative, got {s}"));
    }
    Ok(())
}

fn impulses(grid: Grid, eta0: f64, s: f64, seed: u64, random_signs: bool) -> Result<Signal> {
    check_impulse_params(eta0, s)?;
    let n = grid.n();
    let m = carrier_count(eta0, n);
    let mut rng = rng::stream(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..m {
        let j = rng.random_range(k..n);
        perm.swap(k, j);
    }
    let height = s / eta0;
    let mut values = vec![0.0; n];
    for &idx in &perm[..m] {
        let positive = !random_signs || rng.random::<bool>();
        values[idx] = if positive { height } else { -height };
    }
    Signal::new(grid, values)
}

/// `⌈η₀ n⌉` distinct points carrying `±s/η₀` with fair independent signs.
pub fn gen_salt_pepper(grid: Grid, eta0: f64, s: f64, seed: u64) -> Result<NoiseRealization> {
    Ok(NoiseRealization {
        xi: impulses(grid, eta0, s, seed, true)?,
        seed,
        kind: NoiseKind::SaltPepper,
        params: NoiseParams { eta0, s, sigma: 0.0 },
    })
}

/// As [`gen_salt_pepper`] with all impulses positive.
pub fn gen_pure_impulse(grid: Grid, eta0: f64, s: f64, seed: u64) -> Result<NoiseRealization> {
    Ok(NoiseRealization {
        xi: impulses(grid, eta0, s, seed, false)?,
        seed,
        kind: NoiseKind::PureImpulse,
        params: NoiseParams { eta0, s, sigma: 0.0 },
    })
}

/// I.i.d. `N(0, σ²)` samples.
pub fn gen_gaussian(grid: Grid, sigma: f64, seed: u64) -> Result<NoiseRealization> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return invalid(format!("sigma must be finite and nonnegative, got {sigma}"));
    }
    let mut rng = rng::stream(seed);
    let values = (0..grid.n())
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        })
        .collect();
    Ok(NoiseRealization {
        xi: Signal::new(grid, values)?,
        seed,
        kind: NoiseKind::Gaussian,
        params: NoiseParams { eta0: 0.0, s: 0.0, sigma },
    })
}

impl NoiseRealization {
    /// Text record: `key=value` header lines, then a `values` line followed by
    /// one sample per line.
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("kind={}\n", self.kind));
        out.push_str(&format!("seed={}\n", self.seed));
        out.push_str(&format!("n={}\n", self.xi.len()));
        out.push_str(&format!("eta0={:e}\n", self.params.eta0));
        out.push_str(&format!("s={:e}\n", self.params.s));
        out.push_str(&format!("sigma={:e}\n", self.params.sigma));
        out.push_str("values\n");
        for v in self.xi.values() {
            out.push_str(&format!("{v:e}\n"));
        }
        out
    }

    pub fn from_record(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut seed = None;
        let mut n = None;
        let mut params = NoiseParams::default();
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        for line in lines.by_ref() {
            if line == "values" {
                break;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("malformed record line `{line}`")))?;
            let num = || {
                value
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad number for `{key}`")))
            };
            match key.trim() {
                "kind" => kind = Some(value.trim().parse::<NoiseKind>()?),
                "seed" => {
                    seed = Some(value.trim().parse::<u64>().map_err(|_| {
                        Error::InvalidArgument(format!("bad seed `{value}`"))
                    })?)
                }
                "n" => {
                    n = Some(value.trim().parse::<usize>().map_err(|_| {
                        Error::InvalidArgument(format!("bad n `{value}`"))
                    })?)
                }
                "eta0" => params.eta0 = num()?,
                "s" => params.s = num()?,
                "sigma" => params.sigma = num()?,
                other => return invalid(format!("unknown record key `{other}`")),
            }
        }
        let values = lines
            .map(|l| {
                l.parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad sample `{l}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let n = n.unwrap_or(values.len());
        let xi = Signal::new(Grid::new(n)?, values)?;
        Ok(Self {
            xi,
            seed: seed.ok_or_else(|| Error::InvalidArgument("record without seed".into()))?,
            kind: kind.ok_or_else(|| Error::InvalidArgument("record without kind".into()))?,
            params,
        })
    }
}

/// Piecewise-linear `η ↦ ε_ξ(η)` with breakpoints at `η = j/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonProfile {
    breakpoints: Vec<(f64, f64)>,
}

impl EpsilonProfile {
    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn n(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// `ε_ξ(0) = ‖ξ‖_{L¹}`.
    pub fn total(&self) -> f64 {
        self.breakpoints[0].1
    }

    /// Slopes of the linear pieces, left to right.
    pub fn slopes(&self) -> Vec<f64> {
        self.breakpoints
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }

    pub fn at(&self, eta: f64) -> Result<f64> {
        epsilon_at(self, eta)
    }
}

/// Sorts `|ξ_i|` in descending order (ties by index) and sums what is left
/// after removing the `j` largest entries. Sums run in index order.
pub fn epsilon_profile(xi: &Signal) -> EpsilonProfile {
    let n = xi.len();
    let abs: Vec<f64> = xi.values().iter().map(|v| v.abs()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| abs[b].total_cmp(&abs[a]).then(a.cmp(&b)));
    let mut removed = vec![false; n];
    let mut breakpoints = Vec::with_capacity(n + 1);
    for j in 0..=n {
        if j > 0 {
            removed[order[j - 1]] = true;
        }
        let rest: f64 = abs
            .iter()
            .zip(&removed)
            .filter(|(_, &r)| !r)
            .map(|(v, _)| *v)
            .sum();
        breakpoints.push((j as f64 / n as f64, rest / n as f64));
    }
    EpsilonProfile { breakpoints }
}

pub fn epsilon_at(profile: &EpsilonProfile, eta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eta) {
        return invalid(format!("eta must lie in [0, 1], got {eta}"));
    }
    let n = profile.n();
    let pos = eta * n as f64;
    let j = (pos.floor() as usize).min(n);
    let (e0, v0) = profile.breakpoints[j];
    if j == n || eta == e0 {
        return Ok(v0);
    }
    let (e1, v1) = profile.breakpoints[j + 1];
    let t = (eta - e0) / (e1 - e0);
    Ok(v0 + t * (v1 - v0))
}

/// Solution of `ε_ξ(η̄) = η̄^{γ/(2−κ)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaBar {
    pub eta: f64,
    /// Set when `ε_ξ ≡ 0`; then `η̄ = 0`.
    pub zero_noise: bool,
}

pub fn eta_bar(profile: &EpsilonProfile, gamma: f64, kappa: f64) -> Result<EtaBar> {
    if !(gamma > 0.0) {
        return invalid(format!("gamma must be positive, got {gamma}"));
    }
    if !(kappa > 0.0 && kappa <= 1.0) {
        return invalid(format!("kappa must lie in (0, 1], got {kappa}"));
    }
    if profile.total() <= 0.0 {
        return Ok(EtaBar { eta: 0.0, zero_noise: true });
    }
    let exponent = gamma / (2.0 - kappa);
    let h = |eta: f64| epsilon_at(profile, eta).map(|e| e - eta.powf(exponent));
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut mid = 0.5;
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let v = h(mid)?;
        if v.abs() <= 1e-12 || hi - lo <= f64::EPSILON {
            break;
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(EtaBar { eta: mid, zero_noise: false })
}

/// `(ε_ξ(0) / ε_ξ(η̄))^κ`; `+∞` when `ε_ξ(η̄) = 0`.
pub fn improvement_factor(profile: &EpsilonProfile, eta_bar: f64, kappa: f64) -> Result<f64> {
    let at = epsilon_at(profile, eta_bar)?;
    if at <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((profile.total() / at).powf(kappa))
}

/// Rescales `xi` to a prescribed `L¹` norm.
pub fn with_l1_norm(xi: &Signal, target: f64) -> Signal {
    let current = norm(xi, Norm::L1);
    if current == 0.0 {
        return xi.clone();
    }
    xi.scale(target / current)
}
