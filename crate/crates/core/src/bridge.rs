//! Gaussian bridge interpolation between two latent endpoints.
//!
//! Every latent coordinate is an independent copy of the same stationary
//! Gaussian process in time; the bridge pins the process at `t_0` and `t_m`.
//! [`SequentialBridge`] draws one step at a time from
//! `Z(t_k) | Z(t_0..t_{k-1}), Z(t_m)`, which is the proposal used by the
//! particle sampler. [`JointBridge`] conditions the whole interior block on
//! both endpoints at once and serves as an independent oracle.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::kernel::{build_covariance, CovMatrix, KernelParams, TimeGrid};
use crate::mvn::{cholesky_jitter, condition, standard_normal, DEFAULT_JITTER};

#[derive(Clone, Debug, PartialEq)]
pub struct LatentPoint(Vec<f64>);

impl LatentPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        LatentPoint(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        LatentPoint(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn distance(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

impl Deref for LatentPoint {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for LatentPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for LatentPoint {
    fn from(v: Vec<f64>) -> Self {
        LatentPoint(v)
    }
}

/// Interpolation path: one latent point per grid time.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    grid: TimeGrid,
    points: Vec<LatentPoint>,
}

impl Path {
    pub fn new(grid: TimeGrid, points: Vec<LatentPoint>) -> Result<Self> {
        if points.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: points.len() });
        }
        let d = points[0].dim();
        if let Some(p) = points.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
        }
        Ok(Path { grid, points })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn points(&self) -> &[LatentPoint] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn start(&self) -> &LatentPoint {
        &self.points[0]
    }

    pub fn end(&self) -> &LatentPoint {
        &self.points[self.points.len() - 1]
    }

    /// Point at index `floor(m / 2)`.
    pub fn midpoint(&self) -> &LatentPoint {
        &self.points[self.grid.steps() / 2]
    }

    pub fn interior(&self) -> &[LatentPoint] {
        &self.points[1..self.points.len() - 1]
    }

    /// Pointwise average of paths sharing a grid.
    pub fn average(paths: &[Path]) -> Result<Path> {
        let first = paths.first().ok_or(Error::InsufficientSamples { needed: 1, found: 0 })?;
        let n = paths.len() as f64;
        let mut points = first.points.clone();
        for p in &paths[1..] {
            if p.grid != first.grid || p.dim() != first.dim() {
                return Err(Error::invalid("paths to average must share grid and dimension"));
            }
            for (acc, q) in points.iter_mut().zip(&p.points) {
                for (a, b) in acc.0.iter_mut().zip(q.iter()) {
                    *a += b;
                }
            }
        }
        let last = points.len() - 1;
        for (k, pt) in points.iter_mut().enumerate() {
            if k == 0 || k == last {
                continue;
            }
            pt.0.iter_mut().for_each(|v| *v /= n);
        }
        points[0] = first.points[0].clone();
        points[last] = first.points[last].clone();
        Ok(Path { grid: first.grid.clone(), points })
    }
}

fn check_endpoints(z0: &LatentPoint, zt: &LatentPoint) -> Result<()> {
    if z0.dim() != zt.dim() {
        return Err(Error::DimensionMismatch { expected: z0.dim(), found: zt.dim() });
    }
    if z0.dim() == 0 {
        return Err(Error::invalid("latent dimension must be at least 1"));
    }
    Ok(())
}

pub fn linear_path(z0: &LatentPoint, zt: &LatentPoint, grid: &TimeGrid) -> Result<Path> {
    check_endpoints(z0, zt)?;
    let horizon = grid.horizon();
    let m = grid.steps();
    let points = grid
        .times()
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            if k == 0 {
                return z0.clone();
            }
            if k == m {
                return zt.clone();
            }
            let s = t / horizon;
            LatentPoint(z0.iter().zip(zt.iter()).map(|(a, b)| a + s * (b - a)).collect())
        })
        .collect();
    Ok(Path { grid: grid.clone(), points })
}

/// One-dimensional conditional law of `Z(t_k)` given `Z(t_0..t_{k-1})` and `Z(t_m)`.
#[derive(Clone, Debug)]
pub struct StepLaw {
    k: usize,
    /// Coefficients on `t_0..t_{k-1}` followed by the coefficient on `t_m`.
    weights: Vec<f64>,
    sd: f64,
}

impl StepLaw {
    pub fn new(cov: &CovMatrix, k: usize) -> Result<Self> {
        let m = cov.size() - 1;
        if k == 0 || k >= m {
            return Err(Error::invalid(format!("bridge step index {k} outside 1..={}", m.saturating_sub(1))));
        }
        let given: Vec<usize> = (0..k).chain([m]).collect();
        let cond = condition(cov, &[k], &given)?;
        let weights = cond.mean_map.row(0).iter().copied().collect();
        let sd = cond.cond_var[(0, 0)].max(0.0).sqrt();
        Ok(StepLaw { k, weights, sd })
    }

    pub fn index(&self) -> usize {
        self.k
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }

    /// Conditional mean of one coordinate.
    pub fn mean(&self, history: &[f64], end: f64) -> f64 {
        debug_assert_eq!(history.len(), self.k);
        let (w_hist, w_end) = self.weights.split_at(self.k);
        w_hist.iter().zip(history).map(|(w, x)| w * x).sum::<f64>() + w_end[0] * end
    }

    /// Draws the next point; `history` holds the points at `t_0..t_{k-1}`.
    pub fn draw<R: Rng + ?Sized>(&self, history: &[LatentPoint], end: &LatentPoint, rng: &mut R) -> LatentPoint {
        assert_eq!(history.len(), self.k, "history length must equal step index");
        let (w_hist, w_end) = self.weights.split_at(self.k);
        let coords = (0..end.dim())
            .map(|c| {
                let mean = w_hist.iter().zip(history).map(|(w, p)| w * p[c]).sum::<f64>() + w_end[0] * end[c];
                mean + self.sd * standard_normal(rng)
            })
            .collect();
        LatentPoint(coords)
    }
}

/// Draws `Z(t_k)` for `k = history.len()`, conditioning afresh on the full history and `zT`.
pub fn bridge_step<R: Rng + ?Sized>(
    history: &[LatentPoint],
    zt: &LatentPoint,
    cov: &CovMatrix,
    rng: &mut R,
) -> Result<LatentPoint> {
    if let Some(p) = history.iter().find(|p| p.dim() != zt.dim()) {
        return Err(Error::DimensionMismatch { expected: zt.dim(), found: p.dim() });
    }
    let law = StepLaw::new(cov, history.len())?;
    Ok(law.draw(history, zt, rng))
}

/// Precomputed step laws for `k = 1..m-1` on one grid.
#[derive(Clone, Debug)]
pub struct SequentialBridge {
    grid: TimeGrid,
    steps: Vec<StepLaw>,
}

impl SequentialBridge {
    pub fn new(params: &KernelParams, grid: &TimeGrid) -> Result<Self> {
        Self::from_covariance(&build_covariance(params, grid), grid)
    }

    pub fn from_covariance(cov: &CovMatrix, grid: &TimeGrid) -> Result<Self> {
        if cov.size() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: cov.size() });
        }
        let steps = (1..grid.steps()).map(|k| StepLaw::new(cov, k)).collect::<Result<_>>()?;
        Ok(SequentialBridge { grid: grid.clone(), steps })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Law of step `k`, `1 <= k <= m-1`.
    pub fn step(&self, k: usize) -> &StepLaw {
        &self.steps[k - 1]
    }

    pub fn sample<R: Rng + ?Sized>(&self, z0: &LatentPoint, zt: &LatentPoint, rng: &mut R) -> Result<Path> {
        check_endpoints(z0, zt)?;
        let mut points = Vec::with_capacity(self.grid.len());
        points.push(z0.clone());
        for law in &self.steps {
            let next = law.draw(&points, zt, rng);
            points.push(next);
        }
        points.push(zt.clone());
        Ok(Path { grid: self.grid.clone(), points })
    }
}

pub fn sample_bridge<R: Rng + ?Sized>(
    z0: &LatentPoint,
    zt: &LatentPoint,
    params: &KernelParams,
    grid: &TimeGrid,
    rng: &mut R,
) -> Result<Path> {
    SequentialBridge::new(params, grid)?.sample(z0, zt, rng)
}

/// Joint law of the interior `Z(t_1..t_{m-1})` given both endpoints.
#[derive(Clone, Debug)]
pub struct JointBridge {
    grid: TimeGrid,
    /// `(m-1) x 2` map from `(z0_c, zT_c)` to the interior mean.
    mean_map: DMatrix<f64>,
    lower: DMatrix<f64>,
    variances: Vec<f64>,
}

impl JointBridge {
    pub fn new(params: &KernelParams, grid: &TimeGrid) -> Result<Self> {
        let cov = build_covariance(params, grid);
        let m = grid.steps();
        let free: Vec<usize> = (1..m).collect();
        let cond = condition(&cov, &free, &[0, m])?;
        let lower = cholesky_jitter(&cond.cond_var, DEFAULT_JITTER)?.lower();
        let variances = (0..free.len()).map(|i| cond.cond_var[(i, i)].max(0.0)).collect();
        Ok(JointBridge { grid: grid.clone(), mean_map: cond.mean_map, lower, variances })
    }

    /// Exact conditional mean of coordinate values at each interior time.
    pub fn interior_mean(&self, z0: f64, zt: f64) -> Vec<f64> {
        (&self.mean_map * DVector::from_column_slice(&[z0, zt])).iter().copied().collect()
    }

    /// Exact conditional variance at each interior time (same for every coordinate).
    pub fn interior_variance(&self) -> &[f64] {
        &self.variances
    }

    pub fn sample<R: Rng + ?Sized>(&self, z0: &LatentPoint, zt: &LatentPoint, rng: &mut R) -> Result<Path> {
        check_endpoints(z0, zt)?;
        let d = z0.dim();
        let n = self.lower.nrows();
        let mut interior = vec![vec![0.0; d]; n];
        for c in 0..d {
            let mean = &self.mean_map * DVector::from_column_slice(&[z0[c], zt[c]]);
            let eps = DVector::from_fn(n, |_, _| standard_normal(rng));
            let x = mean + &self.lower * eps;
            for (row, v) in interior.iter_mut().zip(x.iter()) {
                row[c] = *v;
            }
        }
        let points = std::iter::once(z0.clone())
            .chain(interior.into_iter().map(LatentPoint))
            .chain(std::iter::once(zt.clone()))
            .collect();
        Ok(Path { grid: self.grid.clone(), points })
    }
}

pub fn sample_bridge_joint_oracle<R: Rng + ?Sized>(
    z0: &LatentPoint,
    zt: &LatentPoint,
    params: &KernelParams,
    grid: &TimeGrid,
    rng: &mut R,
) -> Result<Path> {
    JointBridge::new(params, grid)?.sample(z0, zt, rng)
}
