//! Tikhonov solvers with the penalty `½‖u‖²`.
//!
//! `L¹` fidelity is solved through the Fenchel dual
//!
//! ```text
//! max_{‖p‖∞ ≤ 1/α}  −½‖T*p‖² + ⟨p, g_obs⟩,        u = T*p,
//! ```
//!
//! a concave quadratic over a box. Every result carries the duality gap as a
//! certificate. `L²` fidelity has the closed form `u = (T*T + αI)⁻¹ T* g_obs`.
//!
//! In matrix terms, with the operator matrix `A` and `H = A Aᵀ`, the dual is
//! the box QP `min ½ pᵀHp − gᵀp` and its gradient `Hp − g` equals the primal
//! residual `A u − g` at `u = Aᵀp`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::mesh::{inner, norm, Norm, Signal};
use crate::operators::KernelOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fidelity {
    L1,
    L2,
}

impl fmt::Display for Fidelity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fidelity::L1 => "l1",
            Fidelity::L2 => "l2",
        })
    }
}

impl FromStr for Fidelity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Fidelity::L1),
            "l2" => Ok(Fidelity::L2),
            _ => invalid(format!("unknown fidelity `{s}`")),
        }
    }
}

/// Algorithm for the `L¹` dual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DualMethod {
    /// Primal-dual active-set iteration: fix the bound variables, solve the
    /// face system exactly, update the active set from the multiplier signs
    /// until it repeats. Finished by [`DualMethod::ProjectedNewton`], which
    /// also takes over if the iteration cycles.
    #[default]
    ActiveSet,
    /// Gradient projection to select the active face, then an exact Newton
    /// step on the free variables with a projected backtracking search.
    ProjectedNewton,
    /// Projected gradient with Nesterov momentum, step `1/L` and restart
    /// whenever the dual value decreases.
    Accelerated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub alpha: f64,
    /// Relative duality gap `(P − D) / max(1, |P|)` accepted as converged.
    pub gap_tol: f64,
    pub max_iter: usize,
    pub fidelity: Fidelity,
    pub method: DualMethod,
}

impl SolveConfig {
    pub const DEFAULT_GAP_TOL: f64 = 1e-8;
    pub const DEFAULT_MAX_ITER: usize = 50_000;

    pub fn new(alpha: f64, fidelity: Fidelity) -> Self {
        Self {
            alpha,
            gap_tol: Self::DEFAULT_GAP_TOL,
            max_iter: Self::DEFAULT_MAX_ITER,
            fidelity,
            method: DualMethod::default(),
        }
    }

    pub fn l1(alpha: f64) -> Self {
        Self::new(alpha, Fidelity::L1)
    }

    pub fn l2(alpha: f64) -> Self {
        Self::new(alpha, Fidelity::L2)
    }

    pub fn with_method(mut self, method: DualMethod) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.gap_tol > 0.0) {
            return invalid(format!("gap_tol must be positive, got {}", self.gap_tol));
        }
        if self.max_iter == 0 {
            return invalid("max_iter must be at least 1");
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return invalid(format!("alpha must be positive and finite, got {alpha}"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub u: Signal,
    /// Dual variable (`L¹` only).
    pub p: Option<Signal>,
    pub primal_value: f64,
    pub dual_value: Option<f64>,
    /// Absolute gap `P(u) − D(p)`.
    pub gap: Option<f64>,
    /// `gap / max(1, |P(u)|)`.
    pub relative_gap: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `(1/α)‖Tu − g‖_{L¹} + ½‖u‖²` or `(1/2α)‖Tu − g‖²_{L²} + ½‖u‖²`.
pub fn primal_objective(
    op: &KernelOperator,
    g_obs: &Signal,
    alpha: f64,
    u: &Signal,
    fidelity: Fidelity,
) -> Result<f64> {
    check_alpha(alpha)?;
    let residual = op.apply(u)?.sub(g_obs)?;
    let penalty = 0.5 * inner(u, u)?;
    Ok(match fidelity {
        Fidelity::L1 => norm(&residual, Norm::L1) / alpha + penalty,
        Fidelity::L2 => {
            let r = norm(&residual, Norm::L2);
            r * r / (2.0 * alpha) + penalty
        }
    })
}

/// `−½‖T*p‖² + ⟨p, g_obs⟩`.
pub fn dual_value(op: &KernelOperator, g_obs: &Signal, p: &Signal) -> Result<f64> {
    let tp = op.apply_adjoint(p)?;
    Ok(-0.5 * inner(&tp, &tp)? + inner(p, g_obs)?)
}

/// `P(u) − D(p)` for the `L¹` problem. Nonnegative up to rounding for every
/// feasible `p` by weak duality.
pub fn duality_gap(
    op: &KernelOperator,
    g_obs: &Signal,
    alpha: f64,
    u: &Signal,
    p: &Signal,
) -> Result<f64> {
    check_alpha(alpha)?;
    let bound = 1.0 / alpha;
    let pmax = norm(p, Norm::Linf);
    if pmax > bound * (1.0 + 1e-12) {
        return invalid(format!("dual variable infeasible: ‖p‖∞ = {pmax} > 1/alpha = {bound}"));
    }
    Ok(primal_objective(op, g_obs, alpha, u, Fidelity::L1)? - dual_value(op, g_obs, p)?)
}

pub fn solve(op: &KernelOperator, g_obs: &Signal, cfg: &SolveConfig) -> Result<SolveResult> {
    match cfg.fidelity {
        Fidelity::L1 => solve_l1_dual(op, g_obs, cfg),
        Fidelity::L2 => solve_l2(op, g_obs, cfg.alpha),
    }
}

/// `(T*T + αI)⁻¹ T* g_obs` by Cholesky with iterative refinement.
pub fn solve_l2(op: &KernelOperator, g_obs: &Signal, alpha: f64) -> Result<SolveResult> {
    L2Solver::new(op).solve(g_obs, alpha)
}

pub fn solve_l1_dual(op: &KernelOperator, g_obs: &Signal, cfg: &SolveConfig) -> Result<SolveResult> {
    DualSolver::new(op).solve(g_obs, cfg, None)
}

/// Normal-equation solver that keeps `T*T` between calls.
#[derive(Debug, Clone)]
pub struct L2Solver<'a> {
    op: &'a KernelOperator,
    gram: DMatrix<f64>,
}

impl<'a> L2Solver<'a> {
    pub fn new(op: &'a KernelOperator) -> Self {
        let a = op.matrix();
        Self {
            op,
            gram: a.tr_mul(a),
        }
    }

    pub fn solve(&self, g_obs: &Signal, alpha: f64) -> Result<SolveResult> {
        check_alpha(alpha)?;
        let grid = self.op.grid();
        grid.check_same(&g_obs.grid())?;
        let a = self.op.matrix();
        let rhs = a.tr_mul(&DVector::from_column_slice(g_obs.values()));
        let mut m = self.gram.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += alpha;
        }
        let chol = m
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("T*T + alpha I is not positive definite".into()))?;
        let mut u = chol.solve(&rhs);
        let target = 1e-10 * rhs.norm();
        for _ in 0..3 {
            let res = &rhs - &m * &u;
            if res.norm() <= target {
                break;
            }
            u += chol.solve(&res);
        }
        let u = Signal::new(grid, u.as_slice().to_vec())?;
        let primal_value = primal_objective(self.op, g_obs, alpha, &u, Fidelity::L2)?;
        Ok(SolveResult {
            u,
            p: None,
            primal_value,
            dual_value: None,
            gap: None,
            relative_gap: None,
            iterations: 1,
            converged: true,
        })
    }
}

/// Dual `L¹` solver holding `H = A Aᵀ` and its largest eigenvalue, so that
/// sweeps over `α` reuse them.
#[derive(Debug, Clone)]
pub struct DualSolver<'a> {
    op: &'a KernelOperator,
    hessian: DMatrix<f64>,
    lipschitz: f64,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;
const MAX_GP_STEPS: usize = 25;
/// Non-improving PDAS steps tolerated before switching to the primal method.
const PDAS_PATIENCE: usize = 5;

impl<'a> DualSolver<'a> {
    pub fn new(op: &'a KernelOperator) -> Self {
        let a = op.matrix();
        let hessian = a * a.transpose();
        let lipschitz = 1.05 * largest_eigenvalue(&hessian);
        Self {
            op,
            hessian,
            lipschitz,
        }
    }

    /// Step-size constant `L`, the power-iteration estimate of `‖TT*‖` padded by 5%.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Solves the dual, starting from `warm` (clamped into the box) when given.
    pub fn solve(&self, g_obs: &Signal, cfg: &SolveConfig, warm: Option<&Signal>) -> Result<SolveResult> {
        cfg.validate()?;
        let grid = self.op.grid();
        grid.check_same(&g_obs.grid())?;
        let g = DVector::from_column_slice(g_obs.values());
        let bound = 1.0 / cfg.alpha;
        let mut qp = BoxQp {
            h: &self.hessian,
            g: &g,
            bound,
            alpha: cfg.alpha,
            n: grid.n() as f64,
        };
        let p0 = match warm {
            Some(w) => {
                grid.check_same(&w.grid())?;
                qp.clamp(DVector::from_column_slice(w.values()))
            }
            None => qp.scaled_start(),
        };
        let outcome = match cfg.method {
            DualMethod::ActiveSet => {
                let first = qp.active_set(p0, cfg.max_iter);
                let rest = cfg.max_iter.saturating_sub(first.iterations).max(1);
                let polished = qp.projected_newton(first.p, cfg.gap_tol, rest);
                Outcome {
                    p: polished.p,
                    iterations: first.iterations + polished.iterations,
                }
            }
            DualMethod::ProjectedNewton => qp.projected_newton(p0, cfg.gap_tol, cfg.max_iter),
            DualMethod::Accelerated => qp.accelerated(p0, self.lipschitz, cfg.gap_tol, cfg.max_iter),
        };
        qp.bound = bound;
        let cert = qp.certificate(&outcome.p);
        let u = self.op.matrix().tr_mul(&outcome.p);
        Ok(SolveResult {
            u: Signal::new(grid, u.as_slice().to_vec())?,
            p: Some(Signal::new(grid, outcome.p.as_slice().to_vec())?),
            primal_value: cert.primal,
            dual_value: Some(cert.dual),
            gap: Some(cert.gap),
            relative_gap: Some(cert.relative),
            iterations: outcome.iterations,
            converged: cert.relative <= cfg.gap_tol,
        })
    }
}

fn largest_eigenvalue(h: &DMatrix<f64>) -> f64 {
    let n = h.nrows();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w = h * &v;
        let next = v.dot(&w);
        let wn = w.norm();
        if wn == 0.0 {
            return 0.0;
        }
        v = w / wn;
        if (next - lambda).abs() <= 1e-12 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda
}

struct Certificate {
    primal: f64,
    dual: f64,
    gap: f64,
    relative: f64,
}

struct Outcome {
    p: DVector<f64>,
    iterations: usize,
}

/// `min ½ pᵀHp − gᵀp` over `|p_i| ≤ bound`.
struct BoxQp<'a> {
    h: &'a DMatrix<f64>,
    g: &'a DVector<f64>,
    bound: f64,
    alpha: f64,
    n: f64,
}

impl BoxQp<'_> {
    fn clamp(&self, mut p: DVector<f64>) -> DVector<f64> {
        let c = self.bound;
        p.apply(|v| *v = v.clamp(-c, c));
        p
    }

    /// Objective and gradient `Hp − g`.
    fn eval(&self, p: &DVector<f64>) -> (f64, DVector<f64>) {
        let grad = self.h * p - self.g;
        let f = 0.5 * p.dot(&(&grad - self.g));
        (f, grad)
    }

    fn value(&self, p: &DVector<f64>) -> f64 {
        self.eval(p).0
    }

    /// `p = clamp(s·g)` with `s` picked from a geometric ladder plus the
    /// unconstrained minimizer along `g`.
    fn scaled_start(&self) -> DVector<f64> {
        let zero = DVector::zeros(self.g.len());
        let gmax = self.g.amax();
        if gmax == 0.0 {
            return zero;
        }
        let mut best = (0.0, zero);
        let hg = self.h * self.g;
        let curvature = self.g.dot(&hg);
        let mut scales: Vec<f64> = (0..48).map(|k| self.bound / gmax * 0.5f64.powi(k)).collect();
        if curvature > 0.0 {
            scales.push(self.g.dot(self.g) / curvature);
        }
        for s in scales {
            let p = self.clamp(self.g * s);
            let f = self.value(&p);
            if f < best.0 {
                best = (f, p);
            }
        }
        best.1
    }

    /// Gap in the weighted units of the original problem, using `r = Hp − g`:
    /// `P − D = (1/n) Σ (|r_i|/α + p_i r_i)`.
    fn certificate(&self, p: &DVector<f64>) -> Certificate {
        let r = self.h * p - self.g;
        let l1: f64 = r.iter().map(|v| v.abs()).sum();
        let gap_sum: f64 = r.iter().zip(p.iter()).map(|(ri, pi)| ri.abs() / self.alpha + pi * ri).sum();
        let gap = gap_sum.max(0.0) / self.n;
        // ‖Aᵀp‖² = pᵀHp = pᵀ(r + g).
        let u_sq = p.dot(&(&r + self.g));
        let primal = l1 / (self.alpha * self.n) + 0.5 * u_sq / self.n;
        let dual = (-0.5 * u_sq + p.dot(self.g)) / self.n;
        Certificate {
            primal,
            dual,
            gap,
            relative: gap / primal.abs().max(1.0),
        }
    }

    fn at_bound(&self, p: &DVector<f64>) -> Vec<bool> {
        p.iter().map(|v| v.abs() >= self.bound).collect()
    }

    /// Armijo backtracking along `t ↦ clamp(p + t d)`.
    fn projected_search(
        &self,
        p: &DVector<f64>,
        f: f64,
        grad: &DVector<f64>,
        d: &DVector<f64>,
        t0: f64,
    ) -> Option<(DVector<f64>, f64, DVector<f64>)> {
        let mut t = t0;
        for _ in 0..MAX_BACKTRACK {
            let q = self.clamp(p + d * t);
            let step = &q - p;
            let decrease = grad.dot(&step);
            if decrease < 0.0 {
                let (fq, gq) = self.eval(&q);
                if fq <= f + ARMIJO * decrease {
                    return Some((q, fq, gq));
                }
            }
            t *= 0.5;
        }
        None
    }

    /// Exact minimizer of the objective on the face where the entries with
    /// `state[i] = ±1` sit at `±bound`. `None` if the face matrix is not
    /// numerically positive definite.
    fn face_solution(&self, state: &[i8]) -> Option<DVector<f64>> {
        let m = state.len();
        let b = self.bound;
        let free: Vec<usize> = (0..m).filter(|&i| state[i] == 0).collect();
        let mut p = DVector::from_fn(m, |i, _| state[i] as f64 * b);
        if !free.is_empty() {
            let fixed = self.h * &p;
            let hff = DMatrix::from_fn(free.len(), free.len(), |a, c| self.h[(free[a], free[c])]);
            let rhs = DVector::from_fn(free.len(), |a, _| self.g[free[a]] - fixed[free[a]]);
            let sol = hff.cholesky()?.solve(&rhs);
            for (a, &i) in free.iter().enumerate() {
                p[i] = sol[a];
            }
        }
        Some(p)
    }

    /// Multiplier `μ = g − Hp` and the margin below which its sign is not trusted.
    fn multiplier(&self, p: &DVector<f64>) -> (DVector<f64>, f64) {
        let hp = self.h * p;
        let tol = 1e-12 * self.g.amax().max(hp.amax());
        (self.g - hp, tol)
    }

    /// Primal-dual active-set iteration from the sign pattern of the bound
    /// entries of `p0`: every violated index switches at once. Stops when
    /// the state is optimal, repeats or stops improving the clamped
    /// objective, then hands the best feasible iterate
    /// to [`BoxQp::primal_active_set`].
    fn active_set(&self, p0: DVector<f64>, max_iter: usize) -> Outcome {
        let m = p0.len();
        let b = self.bound;
        // -1, 0, +1: at the lower bound, free, at the upper bound.
        let mut state: Vec<i8> = p0
            .iter()
            .map(|&v| if v >= b { 1 } else if v <= -b { -1 } else { 0 })
            .collect();
        let mut best_f = self.value(&p0);
        let mut best = p0;
        let mut seen = std::collections::HashSet::new();
        let mut iterations = 0;
        let mut stalled = 0;
        while iterations < max_iter && stalled < PDAS_PATIENCE && seen.insert(state.clone()) {
            iterations += 1;
            let Some(p) = self.face_solution(&state) else { break };
            let (mu, mu_tol) = self.multiplier(&p);
            let p_tol = b * (1.0 + 1e-12);
            let next: Vec<i8> = (0..m)
                .map(|i| match state[i] {
                    0 if p[i] > p_tol => 1,
                    0 if p[i] < -p_tol => -1,
                    0 => 0,
                    s if (s as f64) * mu[i] >= -mu_tol => s,
                    _ => 0,
                })
                .collect();
            let feasible = self.clamp(p);
            let f = self.value(&feasible);
            if f < best_f {
                best_f = f;
                best = feasible;
                stalled = 0;
            } else {
                stalled += 1;
            }
            if next == state {
                return Outcome { p: best, iterations };
            }
            state = next;
        }
        let rest = self.primal_active_set(best, max_iter.saturating_sub(iterations));
        Outcome {
            p: rest.p,
            iterations: iterations + rest.iterations,
        }
    }

    /// Feasible descent active-set method: move towards the face minimizer
    /// up to the first blocking bound, and release the bound entry with the
    /// most negative multiplier once the face is solved. The objective never
    /// increases.
    fn primal_active_set(&self, p0: DVector<f64>, max_iter: usize) -> Outcome {
        let m = p0.len();
        let b = self.bound;
        let mut p = p0;
        let mut state: Vec<i8> = p
            .iter()
            .map(|&v| if v >= b { 1 } else if v <= -b { -1 } else { 0 })
            .collect();
        let mut iterations = 0;
        while iterations < max_iter {
            iterations += 1;
            let Some(q) = self.face_solution(&state) else { break };
            let d = &q - &p;
            let mut t = 1.0;
            let mut blocking = None;
            for i in 0..m {
                if state[i] != 0 || d[i] == 0.0 {
                    continue;
                }
                let limit = if d[i] > 0.0 { (b - p[i]) / d[i] } else { (-b - p[i]) / d[i] };
                if limit < t {
                    t = limit.max(0.0);
                    blocking = Some(i);
                }
            }
            if let Some(i) = blocking {
                p = self.clamp(&p + d * t);
                state[i] = if p[i] > 0.0 { 1 } else { -1 };
                p[i] = state[i] as f64 * b;
                continue;
            }
            p = q;
            let (mu, mu_tol) = self.multiplier(&p);
            let release = (0..m)
                .filter(|&i| state[i] != 0)
                .map(|i| (i, state[i] as f64 * mu[i]))
                .filter(|&(_, v)| v < -mu_tol)
                .min_by(|x, y| x.1.total_cmp(&y.1));
            match release {
                Some((i, _)) => state[i] = 0,
                None => break,
            }
        }
        Outcome { p, iterations }
    }

    fn projected_newton(&self, p0: DVector<f64>, tol: f64, max_iter: usize) -> Outcome {
        let mut p = p0;
        let (mut f, mut grad) = self.eval(&p);
        let mut iterations = 0;
        while iterations < max_iter {
            if self.certificate(&p).relative <= tol {
                break;
            }
            iterations += 1;
            let f_start = f;

            // Gradient projection until the active set settles.
            let mut active = self.at_bound(&p);
            for _ in 0..MAX_GP_STEPS {
                let d = -&grad;
                // Exact minimizer along −grad over the components free to move.
                let mut dd = d.clone();
                for i in 0..dd.len() {
                    if (p[i] >= self.bound && d[i] > 0.0) || (p[i] <= -self.bound && d[i] < 0.0) {
                        dd[i] = 0.0;
                    }
                }
                let num = dd.dot(&dd);
                if num == 0.0 {
                    break;
                }
                let curv = dd.dot(&(self.h * &dd));
                let t0 = if curv > 0.0 { num / curv } else { 1.0 };
                match self.projected_search(&p, f, &grad, &d, t0) {
                    Some((q, fq, gq)) => {
                        p = q;
                        f = fq;
                        grad = gq;
                    }
                    None => break,
                }
                let now = self.at_bound(&p);
                if now == active {
                    break;
                }
                active = now;
            }

            // Newton step on the face of free variables.
            let free: Vec<usize> = (0..p.len()).filter(|&i| p[i].abs() < self.bound).collect();
            if !free.is_empty() {
                let hff = DMatrix::from_fn(free.len(), free.len(), |a, b| self.h[(free[a], free[b])]);
                let rhs = DVector::from_fn(free.len(), |a, _| -grad[free[a]]);
                if let Some(chol) = hff.cholesky() {
                    let step = chol.solve(&rhs);
                    let mut d = DVector::zeros(p.len());
                    for (a, &i) in free.iter().enumerate() {
                        d[i] = step[a];
                    }
                    if let Some((q, fq, gq)) = self.projected_search(&p, f, &grad, &d, 1.0) {
                        p = q;
                        f = fq;
                        grad = gq;
                    }
                }
            }

            if !(f < f_start) {
                break;
            }
        }
        Outcome { p, iterations }
    }

    fn accelerated(&self, p0: DVector<f64>, lipschitz: f64, tol: f64, max_iter: usize) -> Outcome {
        let step = 1.0 / lipschitz;
        let mut p = p0;
        let mut f = self.value(&p);
        let mut y = p.clone();
        let mut t = 1.0f64;
        let mut iterations = 0;
        while iterations < max_iter {
            if iterations % 10 == 0 && self.certificate(&p).relative <= tol {
                break;
            }
            iterations += 1;
            let gy = self.h * &y - self.g;
            let next = self.clamp(&y - gy * step);
            let f_next = self.value(&next);
            if f_next > f {
                // Dual value dropped: drop the momentum and retry from p.
                if y == p {
                    break;
                }
                y = p.clone();
                t = 1.0;
                continue;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = &next + (&next - &p) * ((t - 1.0) / t_next);
            p = next;
            f = f_next;
            t = t_next;
        }
        Outcome { p, iterations }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Grid;
    use crate::operators::{assemble, make_test_problem};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_signal(grid: Grid, rng: &mut ChaCha8Rng, scale: f64) -> Signal {
        Signal::new(grid, (0..grid.n()).map(|_| scale * rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn primal_objective_examples() {
        let grid = Grid::new(16).unwrap();
        let op = assemble(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_signal(grid, &mut rng, 1.0);
        let zero = Signal::zeros(grid);
        let v = primal_objective(&op, &g, 0.3, &zero, Fidelity::L1).unwrap();
        assert!((v - norm(&g, Norm::L1) / 0.3).abs() < 1e-14);
        let u = random_signal(grid, &mut rng, 1.0);
        let tu = op.apply(&u).unwrap();
        let v = primal_objective(&op, &tu, 0.3, &u, Fidelity::L1).unwrap();
        assert!((v - 0.5 * inner(&u, &u).unwrap()).abs() < 1e-15);
        assert_eq!(primal_objective(&op, &zero, 0.3, &zero, Fidelity::L2).unwrap(), 0.0);
        assert!(primal_objective(&op, &g, 0.0, &zero, Fidelity::L1).is_err());
    }

    #[test]
    fn l2_zero_data_and_large_alpha() {
        let grid = Grid::new(32).unwrap();
        let op = assemble(grid);
        let r = solve_l2(&op, &Signal::zeros(grid), 0.1).unwrap();
        assert!(r.u.values().iter().all(|v| *v == 0.0));
        let g = make_test_problem("sine_1", grid).unwrap().g_dag_analytic;
        let r = solve_l2(&op, &g, 1e8).unwrap();
        let tg = op.apply_adjoint(&g).unwrap();
        assert!(norm(&r.u, Norm::L2) <= norm(&tg, Norm::L2) / 1e8 * (1.0 + 1e-9));
        assert!(solve_l2(&op, &g, 0.0).is_err());
        assert!(solve_l2(&op, &g, -1.0).is_err());
    }

    #[test]
    fn l2_matches_lu_oracle() {
        let grid = Grid::new(16).unwrap();
        let op = assemble(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for alpha in [1e-6, 1e-3, 0.5] {
            let g = random_signal(grid, &mut rng, 1.0);
            let a = op.matrix();
            let m = a.transpose() * a + DMatrix::identity(16, 16) * alpha;
            let rhs = a.transpose() * DVector::from_column_slice(g.values());
            let oracle = m.clone().lu().solve(&rhs).unwrap();
            let r = solve_l2(&op, &g, alpha).unwrap();
            let u = DVector::from_column_slice(r.u.values());
            assert!((&u - &oracle).amax() <= 1e-10 * oracle.amax().max(1.0));
            let residual = (&m * &u - &rhs).norm();
            assert!(residual <= 1e-10 * rhs.norm());
        }
    }

    #[test]
    fn l1_zero_data() {
        let grid = Grid::new(12).unwrap();
        let op = assemble(grid);
        for method in [DualMethod::ActiveSet, DualMethod::ProjectedNewton, DualMethod::Accelerated] {
            let r = solve_l1_dual(&op, &Signal::zeros(grid), &SolveConfig::l1(0.1).with_method(method)).unwrap();
            assert!(r.p.as_ref().unwrap().values().iter().all(|v| *v == 0.0));
            assert!(r.u.values().iter().all(|v| *v == 0.0));
            assert_eq!(r.gap, Some(0.0));
            assert!(r.converged);
        }
    }

    #[test]
    fn duality_gap_at_origin_and_infeasible() {
        let grid = Grid::new(10).unwrap();
        let op = assemble(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_signal(grid, &mut rng, 2.0);
        let zero = Signal::zeros(grid);
        let gap = duality_gap(&op, &g, 0.25, &zero, &zero).unwrap();
        assert!((gap - norm(&g, Norm::L1) / 0.25).abs() < 1e-14);
        let too_big = Signal::from_fn(grid, |_| 4.5).unwrap();
        assert!(duality_gap(&op, &g, 0.25, &zero, &too_big).is_err());
    }

    #[test]
    fn weak_duality_random() {
        let grid = Grid::new(20).unwrap();
        let op = assemble(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let alpha = 10f64.powf(rng.random_range(-4.0..0.0));
            let g = random_signal(grid, &mut rng, 3.0);
            let p = random_signal(grid, &mut rng, 1.0 / alpha);
            let u = op.apply_adjoint(&p).unwrap();
            assert!(duality_gap(&op, &g, alpha, &u, &p).unwrap() >= -1e-10);
            let other = random_signal(grid, &mut rng, 5.0);
            assert!(duality_gap(&op, &g, alpha, &other, &p).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn certificate_matches_direct_gap() {
        let grid = Grid::new(24).unwrap();
        let op = assemble(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_signal(grid, &mut rng, 1.0);
        let r = solve_l1_dual(&op, &g, &SolveConfig::l1(0.01)).unwrap();
        let p = r.p.clone().unwrap();
        let direct = duality_gap(&op, &g, 0.01, &r.u, &p).unwrap();
        assert!((direct - r.gap.unwrap()).abs() <= 1e-9 * r.primal_value.abs().max(1.0));
        let dv = dual_value(&op, &g, &p).unwrap();
        assert!((dv - r.dual_value.unwrap()).abs() <= 1e-10 * r.primal_value.abs().max(1.0));
    }

    #[test]
    fn l1_solution_invariants() {
        let grid = Grid::new(40).unwrap();
        let op = assemble(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let solver = DualSolver::new(&op);
        for alpha in [1e-4, 1e-2, 0.3, 1.0] {
            let g = random_signal(grid, &mut rng, 0.2);
            let r = solver.solve(&g, &SolveConfig::l1(alpha), None).unwrap();
            assert!(r.converged, "alpha={alpha} gap={:?}", r.relative_gap);
            let p = r.p.as_ref().unwrap();
            assert!(norm(p, Norm::Linf) <= 1.0 / alpha + 1e-12);
            let tp = op.apply_adjoint(p).unwrap();
            for (a, b) in tp.values().iter().zip(r.u.values()) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
            assert!(r.gap.unwrap() >= -1e-10);
            let start = solver
                .solve(&g, &SolveConfig { max_iter: 1, ..SolveConfig::l1(alpha) }, None)
                .unwrap();
            assert!(r.dual_value.unwrap() >= start.dual_value.unwrap() - 1e-12);
        }
    }

    #[test]
    fn accelerated_agrees_with_projected_newton() {
        let grid = Grid::new(16).unwrap();
        let op = assemble(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for alpha in [0.05, 0.5] {
            let g = random_signal(grid, &mut rng, 0.05);
            let newton = solve_l1_dual(&op, &g, &SolveConfig::l1(alpha)).unwrap();
            let cfg = SolveConfig::l1(alpha).with_method(DualMethod::Accelerated);
            let acc = solve_l1_dual(&op, &g, &cfg).unwrap();
            assert!(acc.converged, "gap {:?} after {}", acc.relative_gap, acc.iterations);
            let diff = newton.u.sub(&acc.u).unwrap();
            assert!(norm(&diff, Norm::L2) < 1e-3, "{}", norm(&diff, Norm::L2));
            assert!((newton.primal_value - acc.primal_value).abs() < 1e-7);
        }
    }

    #[test]
    fn methods_agree_on_sweep() {
        // Heavy salt-and-pepper data where the full-switch active-set
        // iteration cycles and the descent phase has to finish.
        let grid = Grid::new(200).unwrap();
        let op = assemble(grid);
        let problem = make_test_problem("sine_1", grid).unwrap();
        let xi = crate::noise::gen_salt_pepper(grid, 0.512, 1.0, 5_655_041_064_075_875_821).unwrap().xi;
        let g = problem.g_dag_analytic.add(&xi).unwrap();
        let solver = DualSolver::new(&op);
        let mut warm: Option<Signal> = None;
        let mut prev = f64::NAN;
        for k in 0..=48 {
            let alpha = 10f64.powf(-(k as f64) / 8.0);
            let start = warm.as_ref().map(|p| p.scale(prev / alpha));
            prev = alpha;
            let fast = solver.solve(&g, &SolveConfig::l1(alpha), start.as_ref()).unwrap();
            assert!(fast.converged, "alpha={alpha}: gap {:?}", fast.relative_gap);
            assert!(fast.iterations < 2000, "alpha={alpha}: {} iterations", fast.iterations);
            if k % 16 == 3 {
                let pn = solver
                    .solve(&g, &SolveConfig::l1(alpha).with_method(DualMethod::ProjectedNewton), None)
                    .unwrap();
                assert!(pn.converged);
                let scale = fast.primal_value.abs().max(1.0);
                assert!((pn.primal_value - fast.primal_value).abs() <= 2e-8 * scale);
            }
            warm = fast.p;
        }
    }

    #[test]
    fn iteration_cap_is_soft() {
        let grid = Grid::new(32).unwrap();
        let op = assemble(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = random_signal(grid, &mut rng, 1.0);
        let cfg = SolveConfig {
            max_iter: 2,
            gap_tol: 1e-15,
            ..SolveConfig::l1(1e-3).with_method(DualMethod::Accelerated)
        };
        let r = solve_l1_dual(&op, &g, &cfg).unwrap();
        assert!(!r.converged);
        assert!(r.gap.unwrap() > 0.0);
        assert!(r.iterations <= 2);
    }

    #[test]
    fn warm_start_reaches_same_solution() {
        let grid = Grid::new(50).unwrap();
        let op = assemble(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let g = random_signal(grid, &mut rng, 0.3);
        let solver = DualSolver::new(&op);
        let coarse = solver.solve(&g, &SolveConfig::l1(0.1), None).unwrap();
        let cold = solver.solve(&g, &SolveConfig::l1(0.01), None).unwrap();
        let warm = solver.solve(&g, &SolveConfig::l1(0.01), coarse.p.as_ref()).unwrap();
        assert!(warm.converged && cold.converged);
        assert!((warm.primal_value - cold.primal_value).abs() < 1e-8 * cold.primal_value.max(1.0));
    }

    #[test]
    fn exact_penalization_benchmark() {
        let grid = Grid::new(64).unwrap();
        let op = assemble(grid);
        let problem = make_test_problem("benchmark_omega_one", grid).unwrap();
        let g = problem.g_dag_discrete(&op).unwrap();
        let r = solve_l1_dual(&op, &g, &SolveConfig::l1(0.4)).unwrap();
        let err = crate::mesh::bregman_error(&r.u, &problem.u_dag).unwrap();
        assert!(err <= 1e-12, "{err}");
        let diff = r.u.sub(&problem.u_dag).unwrap();
        assert!(norm(&diff, Norm::L2) <= 1e-6);
    }

    #[test]
    fn lipschitz_bounds_spectrum() {
        let op = assemble(Grid::new(30).unwrap());
        let solver = DualSolver::new(&op);
        let h = op.matrix() * op.matrix().transpose();
        let eig = h.symmetric_eigenvalues().max();
        assert!(solver.lipschitz() >= eig && solver.lipschitz() <= 1.06 * eig);
    }
}
