//! Midpoint grids on `[0, 1]` and discrete functions living on them.
//!
//! Every cell has measure `1/n`, so the discrete `L¹`/`L²` norms and the inner
//! product carry that weight. The `L∞` norm is the plain maximum of the samples.

use crate::error::{invalid, Error, Result};

/// Uniform midpoint grid with `n` cells on the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("grid needs at least one point");
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Measure of one cell.
    pub fn weight(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Midpoint of cell `i` (zero based), `(2i + 1) / (2n)`.
    pub fn point(&self, i: usize) -> f64 {
        (2 * i + 1) as f64 / (2 * self.n) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GridMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }
}

/// Shorthand for [`Grid::new`].
pub fn make_grid(n: usize) -> Result<Grid> {
    Grid::new(n)
}

/// Pointwise samples of a function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    grid: Grid,
    values: Vec<f64>,
}

impl Signal {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch {
                left: grid.n(),
                right: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("signal value at index {i} is not finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n()],
        }
    }

    /// Samples `f` at the grid midpoints.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sub(&self, other: &Signal) -> Result<Signal> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Signal) -> Result<Signal> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, factor: f64) -> Signal {
        Signal {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    fn zip_with(&self, other: &Signal, f: impl Fn(f64, f64) -> f64) -> Result<Signal> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Signal {
            grid: self.grid,
            values,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

/// Weighted pairing `(1/n) Σ u_i v_i`.
pub fn inner(u: &Signal, v: &Signal) -> Result<f64> {
    u.grid.check_same(&v.grid)?;
    let s: f64 = u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum();
    Ok(s * u.grid.weight())
}

pub fn norm(u: &Signal, mode: Norm) -> f64 {
    match mode {
        Norm::L1 => u.values.iter().map(|v| v.abs()).sum::<f64>() * u.grid.weight(),
        Norm::L2 => (u.values.iter().map(|v| v * v).sum::<f64>() * u.grid.weight()).sqrt(),
        Norm::Linf => u.values.iter().fold(0.0, |m, v| m.max(v.abs())),
    }
}

/// Bregman distance of `½‖·‖²`, i.e. `½‖u − u†‖²`.
pub fn bregman_error(u: &Signal, u_dag: &Signal) -> Result<f64> {
    let diff = u.sub(u_dag)?;
    let l2 = norm(&diff, Norm::L2);
    Ok(0.5 * l2 * l2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sig(values: &[f64]) -> Signal {
        Signal::new(Grid::new(values.len()).unwrap(), values.to_vec()).unwrap()
    }

    #[test]
    fn grid_points() {
        let g = make_grid(2).unwrap();
        assert_eq!(g.points(), vec![0.25, 0.75]);
        assert_eq!(g.weight(), 0.5);
        assert_eq!(make_grid(4).unwrap().points(), vec![0.125, 0.375, 0.625, 0.875]);
        let one = make_grid(1).unwrap();
        assert_eq!(one.points(), vec![0.5]);
        assert_eq!(one.weight(), 1.0);
        assert!(matches!(make_grid(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn grid_invariants() {
        for n in [1, 3, 17, 200] {
            let g = Grid::new(n).unwrap();
            let pts = g.points();
            assert_eq!(pts[0], 1.0 / (2 * n) as f64);
            assert!(pts.windows(2).all(|w| w[0] < w[1]));
            assert!(pts.iter().all(|&x| x > 0.0 && x < 1.0));
            let total: f64 = (0..n).map(|_| g.weight()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inner_examples() {
        let ones = Signal::from_fn(Grid::new(8).unwrap(), |_| 1.0).unwrap();
        assert_eq!(inner(&ones, &ones).unwrap(), 1.0);
        assert_eq!(inner(&sig(&[1.0, -1.0]), &sig(&[1.0, 1.0])).unwrap(), 0.0);
        let u = sig(&[2.0, 0.0, 0.0, 0.0]);
        let v = sig(&[3.0, 0.0, 0.0, 0.0]);
        assert_eq!(inner(&u, &v).unwrap(), 1.5);
        assert!(matches!(
            inner(&u, &ones),
            Err(Error::GridMismatch { left: 4, right: 8 })
        ));
    }

    #[test]
    fn norm_examples() {
        for n in [1, 5, 64] {
            let ones = Signal::from_fn(Grid::new(n).unwrap(), |_| 1.0).unwrap();
            assert!((norm(&ones, Norm::L1) - 1.0).abs() < 1e-15);
        }
        let u = sig(&[4.0, -2.0, 0.0, 0.0]);
        assert_eq!(norm(&u, Norm::L1), 1.5);
        assert_eq!(norm(&u, Norm::Linf), 4.0);
        assert_eq!(norm(&sig(&[3.0, 4.0]), Norm::L2), 12.5f64.sqrt());
    }

    #[test]
    fn bregman_examples() {
        let u = sig(&[0.3, -1.2, 4.0]);
        assert_eq!(bregman_error(&u, &u).unwrap(), 0.0);
        let shifted = Signal::new(u.grid(), u.values().iter().map(|v| v + 1.0).collect()).unwrap();
        assert!((bregman_error(&shifted, &u).unwrap() - 0.5).abs() < 1e-15);
        assert!((bregman_error(&sig(&[2.0, 0.0]), &sig(&[0.0, 0.0])).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_signals() {
        let g = Grid::new(3).unwrap();
        assert!(Signal::new(g, vec![1.0, 2.0]).is_err());
        assert!(Signal::new(g, vec![1.0, f64::NAN, 0.0]).is_err());
        assert!(Signal::new(g, vec![1.0, f64::INFINITY, 0.0]).is_err());
    }

    fn signal_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..40).prop_flat_map(|n| {
            let v = || proptest::collection::vec(-100.0f64..100.0, n);
            (v(), v(), v())
        })
    }

    proptest! {
        #[test]
        fn holder_chain((a, _, _) in signal_strategy()) {
            let u = sig(&a);
            let l1 = norm(&u, Norm::L1);
            let l2 = norm(&u, Norm::L2);
            let linf = norm(&u, Norm::Linf);
            prop_assert!(l1 <= l2 * (1.0 + 1e-12) + 1e-300);
            prop_assert!(l2 <= linf * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn inner_symmetric_bilinear((a, b, c) in signal_strategy(), s in -10.0f64..10.0) {
            let (u, v, w) = (sig(&a), sig(&b), sig(&c));
            let uv = inner(&u, &v).unwrap();
            prop_assert_eq!(uv, inner(&v, &u).unwrap());
            let lhs = inner(&u.scale(s).add(&w).unwrap(), &v).unwrap();
            let rhs = s * uv + inner(&w, &v).unwrap();
            let scale = norm(&u, Norm::L2) * norm(&v, Norm::L2) * s.abs().max(1.0)
                + norm(&w, Norm::L2) * norm(&v, Norm::L2);
            prop_assert!((lhs - rhs).abs() <= 1e-13 * scale.max(1.0));
        }

        #[test]
        fn bregman_nonnegative((a, b, _) in signal_strategy()) {
            let (u, v) = (sig(&a), sig(&b));
            let e = bregman_error(&u, &v).unwrap();
            prop_assert!(e >= 0.0);
            if a != b {
                prop_assert!(e > 0.0);
            }
        }
    }
}
