//! Stationary exponential-power kernel `k(h) = exp(-beta * |h|^alpha)` and the
//! time-covariance matrices it induces on a sampling grid.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    alpha: f64,
    beta: f64,
}

impl KernelParams {
    /// `alpha` must lie in `(0, 2]`; beyond 2 the kernel is no longer
    /// positive semi-definite.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::invalid(format!("kernel alpha must be in (0, 2], got {alpha}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid(format!("kernel beta must be positive, got {beta}")));
        }
        Ok(KernelParams { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    #[inline]
    pub fn eval(&self, h: f64) -> f64 {
        (-self.beta * h.abs().powf(self.alpha)).exp()
    }
}

pub fn kernel_eval(params: &KernelParams, h: f64) -> f64 {
    params.eval(h)
}

/// Sampling times `0 = t_0 < t_1 < ... < t_m = T`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    /// `steps + 1` equidistant times on `[0, horizon]`.
    pub fn equidistant(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(format!("horizon T must be positive, got {horizon}")));
        }
        if steps < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 steps, got {steps}")));
        }
        let delta = horizon / steps as f64;
        let mut times: Vec<f64> = (0..=steps).map(|k| k as f64 * delta).collect();
        times[steps] = horizon;
        Ok(TimeGrid { times })
    }

    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.len() < 3 {
            return Err(Error::invalid("grid needs at least 3 times (2 steps)"));
        }
        if times[0] != 0.0 {
            return Err(Error::invalid(format!("grid must start at 0, got {}", times[0])));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("grid times must be finite and strictly increasing"));
        }
        Ok(TimeGrid { times })
    }

    /// Same as [`from_times`](Self::from_times) but without the strictness
    /// check, so degenerate grids can reach the factorization and fail there.
    pub fn from_times_unchecked(times: Vec<f64>) -> Self {
        TimeGrid { times }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty grid")
    }

    /// Number of steps `m`; there are `m + 1` times.
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Spacing `t_k - t_{k-1}`, for `k >= 1`.
    pub fn spacing(&self, k: usize) -> f64 {
        self.times[k] - self.times[k - 1]
    }

    /// Reversed grid `T - t_{m-k}`.
    pub fn reversed(&self) -> TimeGrid {
        let horizon = self.horizon();
        let times = self.times.iter().rev().map(|t| horizon - t).collect();
        TimeGrid { times }
    }
}

/// Covariance of the process at the grid times, `Σ_ij = k(t_i - t_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovMatrix(DMatrix<f64>);

impl CovMatrix {
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid(format!("covariance must be square, got {}x{}", m.nrows(), m.ncols())));
        }
        Ok(CovMatrix(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }
}

pub fn build_covariance(params: &KernelParams, grid: &TimeGrid) -> CovMatrix {
    let t = grid.times();
    let n = t.len();
    let mut m = DMatrix::from_element(n, n, 1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = params.eval(t[i] - t[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    CovMatrix(m)
}
