//! Tikhonov regularization with `L¹` and `L²` data fidelity for a discretized
//! first-kind integral equation on `[0, 1]`.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: midpoint grids, discrete signals and weighted norms.
//! * [`operators`]: the dense Green's-function operator and analytic test problems.
//! * [`noise`]: impulsive and Gaussian noise generators and the impulsiveness profile.
//! * [`solvers`]: `L¹`-Tikhonov through its box-constrained dual and closed-form `L²`-Tikhonov.
//! * [`theory`]: conjugates, a-priori parameter choices, error bounds and rate exponents.
//! * [`experiments`]: noise sweeps with oracle parameter choice and rate fitting.
//! * [`report`]: flat config files and the CSV/gnuplot output formats.

pub mod error;
pub mod experiments;
pub mod mesh;
pub mod noise;
pub mod operators;
pub mod report;
pub mod rng;
pub mod solvers;
pub mod theory;

pub use error::{Error, Result};
pub use mesh::{bregman_error, inner, norm, Grid, Norm, Signal};
pub use noise::{EpsilonProfile, NoiseKind, NoiseRealization};
pub use operators::{KernelOperator, TestProblem};
pub use solvers::{DualMethod, Fidelity, SolveConfig, SolveResult};
pub use theory::{IndexFunction, RateParams};
