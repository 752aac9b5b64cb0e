//! Midpoint discretization of the integral operator
//! `(Tf)(x) = ∫₀¹ k(x, y) f(y) dy` with `k(x, y) = min{x(1 − y), y(1 − x)}`.
//!
//! `k` is the Green's function of `−d²/dx²` with homogeneous Dirichlet
//! conditions, so `(Tf)'' = −f`. This gives closed-form data for the test
//! problems below, which are sampled directly instead of going through the
//! discrete operator.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::mesh::{Grid, Signal};

/// `min{x(1 − y), y(1 − x)}`.
pub fn green_kernel(x: f64, y: f64) -> f64 {
    (x * (1.0 - y)).min(y * (1.0 - x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelId {
    /// Green's function of `−d²/dx²` on `[0, 1]`.
    Green,
}

/// Dense operator matrix with `A[j][i] = k(x_j, x_i) / n`.
#[derive(Debug, Clone)]
pub struct KernelOperator {
    grid: Grid,
    matrix: DMatrix<f64>,
    kernel: KernelId,
}

impl KernelOperator {
    pub fn assemble(grid: Grid) -> Self {
        let n = grid.n();
        let w = grid.weight();
        let pts = grid.points();
        let matrix = DMatrix::from_fn(n, n, |j, i| w * green_kernel(pts[j], pts[i]));
        Self {
            grid,
            matrix,
            kernel: KernelId::Green,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kernel(&self) -> KernelId {
        self.kernel
    }

    pub fn apply(&self, f: &Signal) -> Result<Signal> {
        self.grid.check_same(&f.grid())?;
        let out = &self.matrix * DVector::from_column_slice(f.values());
        Signal::new(self.grid, out.as_slice().to_vec())
    }

    /// Adjoint with respect to the weighted pairing. The weights are uniform,
    /// so this is multiplication by the transposed matrix.
    pub fn apply_adjoint(&self, p: &Signal) -> Result<Signal> {
        self.grid.check_same(&p.grid())?;
        let out = self.matrix.tr_mul(&DVector::from_column_slice(p.values()));
        Signal::new(self.grid, out.as_slice().to_vec())
    }
}

pub fn assemble(grid: Grid) -> KernelOperator {
    KernelOperator::assemble(grid)
}

/// Exact solutions with closed-form data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// `u† ≡ 1`.
    ConstantOne,
    /// `u†(y) = sin(kπy)`.
    Sine(u32),
    /// `u† = T*ω` with `ω ≡ 1`, i.e. `u†(x) = x(1 − x)/2`.
    BenchmarkOmegaOne,
}

impl ProblemKind {
    pub fn u_dag(&self, x: f64) -> f64 {
        match *self {
            ProblemKind::ConstantOne => 1.0,
            ProblemKind::Sine(k) => (k as f64 * PI * x).sin(),
            ProblemKind::BenchmarkOmegaOne => x * (1.0 - x) / 2.0,
        }
    }

    /// `(Tu†)(x)`, obtained by integrating `−g'' = u†` with `g(0) = g(1) = 0`.
    pub fn g_dag(&self, x: f64) -> f64 {
        match *self {
            ProblemKind::ConstantOne => x * (1.0 - x) / 2.0,
            ProblemKind::Sine(k) => {
                let w = k as f64 * PI;
                (w * x).sin() / (w * w)
            }
            ProblemKind::BenchmarkOmegaOne => (x - 2.0 * x.powi(3) + x.powi(4)) / 24.0,
        }
    }

    fn description(&self) -> String {
        match *self {
            ProblemKind::ConstantOne => "u(x) = 1, g(x) = x(1-x)/2".into(),
            ProblemKind::Sine(k) => format!("u(x) = sin({k} pi x), g(x) = sin({k} pi x)/({k} pi)^2"),
            ProblemKind::BenchmarkOmegaOne => {
                "u(x) = x(1-x)/2 = (T 1)(x), g(x) = (x - 2x^3 + x^4)/24".into()
            }
        }
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant_one" => Ok(ProblemKind::ConstantOne),
            "benchmark_omega_one" => Ok(ProblemKind::BenchmarkOmegaOne),
            _ => match s.strip_prefix("sine_").map(str::parse::<u32>) {
                Some(Ok(k)) if k > 0 => Ok(ProblemKind::Sine(k)),
                _ => invalid(format!("unknown test problem `{s}`")),
            },
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemKind::ConstantOne => write!(f, "constant_one"),
            ProblemKind::Sine(k) => write!(f, "sine_{k}"),
            ProblemKind::BenchmarkOmegaOne => write!(f, "benchmark_omega_one"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TestProblem {
    pub kind: ProblemKind,
    pub u_dag: Signal,
    /// Exact data sampled from the closed form, never from the discrete operator.
    pub g_dag_analytic: Signal,
    pub description: String,
}

impl TestProblem {
    pub fn new(kind: ProblemKind, grid: Grid) -> Result<Self> {
        Ok(Self {
            kind,
            u_dag: Signal::from_fn(grid, |x| kind.u_dag(x))?,
            g_dag_analytic: Signal::from_fn(grid, |x| kind.g_dag(x))?,
            description: kind.description(),
        })
    }

    /// `T_n u†`, the data consistent with the discrete operator.
    pub fn g_dag_discrete(&self, op: &KernelOperator) -> Result<Signal> {
        op.apply(&self.u_dag)
    }
}

pub fn make_test_problem(name: &str, grid: Grid) -> Result<TestProblem> {
    TestProblem::new(name.parse()?, grid)
}
