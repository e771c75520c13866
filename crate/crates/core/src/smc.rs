//! Sequential Monte Carlo sampling of discriminator-reweighted bridge paths.
//!
//! Particles are partial bridge paths. Each step extends every particle with
//! a draw from its own bridge conditional, weights particles by the
//! discriminator, and resamples multinomially. Weights use the end-point
//! discretization of `exp(∫ γ(t) log f(Z(t)) dt)`:
//!
//! ```text
//! w_k ∝ [f(Z_{k-1})^{ξ γ_{k-1}} f(Z_k)^{(1-ξ) γ_k}]^{t_k - t_{k-1}}
//!     × [f(Z_k)^{ξ γ_k} f(Z_T)^{(1-ξ) γ_T}]^{T - t_k}
//! ```
//!
//! `Z_T` is pinned and shared by all particles, so its factor cancels under
//! normalization. With `ξ = 0` and `γ ≡ 1/Δ` on an equidistant grid the
//! weights are just the normalized scores at `t_k`.
//!
//! Randomness is keyed per `(particle, step)` and per resampling step, so
//! results do not depend on the execution backend.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::bridge::{LatentPoint, Path, SequentialBridge};
use crate::discriminator::{score_points, Scorer};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernel::{KernelParams, TimeGrid};
use crate::mvn::RngState;

/// Resampling streams use this particle key.
const RESAMPLE_KEY: u64 = u64::MAX;

/// Per-time `γ` values on the grid together with the convex weight `ξ`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSchedule {
    gamma: Vec<f64>,
    xi: f64,
    /// Equidistant grid for which `γ = 1/Δ` holds exactly.
    unit_grid: Option<TimeGrid>,
}

/// Exponents applied to `log f` at `t_{k-1}`, `t_k` and `T` for one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepExponents {
    pub prev: f64,
    pub current: f64,
    pub end: f64,
}

impl WeightSchedule {
    pub fn new(gamma: Vec<f64>, xi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&xi) {
            return Err(Error::invalid(format!("xi must lie in [0, 1], got {xi}")));
        }
        if gamma.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::invalid("gamma values must be finite and non-negative"));
        }
        Ok(WeightSchedule { gamma, xi, unit_grid: None })
    }

    /// `γ(t) ≡ gamma` on every grid time.
    pub fn constant(grid: &TimeGrid, gamma: f64, xi: f64) -> Result<Self> {
        Self::new(vec![gamma; grid.len()], xi)
    }

    /// `ξ = 0`, `γ ≡ m / T`, which makes weights proportional to the score.
    ///
    /// On the equidistant grid it was built for, the step exponents are the
    /// exact values `(0, 1, 0)` rather than the rounded product `Δ · m / T`.
    pub fn proportional(grid: &TimeGrid) -> Self {
        let gamma = grid.steps() as f64 / grid.horizon();
        let unit_grid = TimeGrid::equidistant(grid.horizon(), grid.steps()).ok().filter(|g| g == grid);
        WeightSchedule { gamma: vec![gamma; grid.len()], xi: 0.0, unit_grid }
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn exponents(&self, grid: &TimeGrid, k: usize) -> StepExponents {
        if self.unit_grid.as_ref() == Some(grid) {
            return StepExponents { prev: 0.0, current: 1.0, end: 0.0 };
        }
        let t = grid.times();
        let m = grid.steps();
        let dt = t[k] - t[k - 1];
        let rest = t[m] - t[k];
        let xi = self.xi;
        StepExponents {
            prev: dt * xi * self.gamma[k - 1],
            current: dt * (1.0 - xi) * self.gamma[k] + rest * xi * self.gamma[k],
            end: rest * (1.0 - xi) * self.gamma[m],
        }
    }
}

/// `N` partial paths sharing the pinned endpoints.
#[derive(Clone, Debug)]
pub struct ParticleEnsemble {
    grid: TimeGrid,
    end: LatentPoint,
    /// Each history holds the points at `t_0..=t_k`.
    histories: Vec<Vec<LatentPoint>>,
}

impl ParticleEnsemble {
    pub fn new(z0: &LatentPoint, zt: &LatentPoint, grid: &TimeGrid, n_particles: usize) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::invalid("need at least one particle"));
        }
        if z0.dim() != zt.dim() {
            return Err(Error::DimensionMismatch { expected: z0.dim(), found: zt.dim() });
        }
        Ok(ParticleEnsemble { grid: grid.clone(), end: zt.clone(), histories: vec![vec![z0.clone()]; n_particles] })
    }

    pub fn from_histories(grid: &TimeGrid, end: LatentPoint, histories: Vec<Vec<LatentPoint>>) -> Result<Self> {
        let len = histories.first().map(Vec::len).ok_or_else(|| Error::invalid("need at least one particle"))?;
        if len == 0 || len >= grid.len() || histories.iter().any(|h| h.len() != len) {
            return Err(Error::invalid("histories must share a length in 1..=m"));
        }
        if let Some(p) = histories.iter().flatten().find(|p| p.dim() != end.dim()) {
            return Err(Error::DimensionMismatch { expected: end.dim(), found: p.dim() });
        }
        Ok(ParticleEnsemble { grid: grid.clone(), end, histories })
    }

    pub fn len(&self) -> usize {
        self.histories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }

    /// Index of the last filled time.
    pub fn current_step(&self) -> usize {
        self.histories[0].len() - 1
    }

    pub fn histories(&self) -> &[Vec<LatentPoint>] {
        &self.histories
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn points_at(&self, k: usize) -> Vec<&[f64]> {
        self.histories.iter().map(|h| h[k].coords()).collect()
    }

    /// Extends every particle to the next time with its own bridge conditional.
    pub fn extend(&mut self, bridge: &SequentialBridge, base: &RngState, exec: Execution) {
        let k = self.current_step() + 1;
        let law = bridge.step(k);
        let end = &self.end;
        let histories = &self.histories;
        let next = exec.map(histories.len(), |n| {
            let mut rng = base.substream(n as u64, k as u64);
            law.draw(&histories[n], end, &mut rng)
        });
        for (h, p) in self.histories.iter_mut().zip(next) {
            h.push(p);
        }
    }

    /// Copies ancestors: particle `i` becomes a copy of `indices[i]`.
    pub fn select(&self, indices: &[usize]) -> ParticleEnsemble {
        ParticleEnsemble {
            grid: self.grid.clone(),
            end: self.end.clone(),
            histories: indices.iter().map(|&i| self.histories[i].clone()).collect(),
        }
    }

    /// Completes all particles with the end point. Requires `current_step() == m - 1`.
    pub fn into_paths(self) -> Result<Vec<Path>> {
        let grid = self.grid;
        let end = self.end;
        self.histories
            .into_iter()
            .map(|mut h| {
                h.push(end.clone());
                Path::new(grid.clone(), h)
            })
            .collect()
    }
}

/// Normalized resampling weights at the ensemble's current step.
pub fn step_weights<S: Scorer + ?Sized>(
    ensemble: &ParticleEnsemble,
    scorer: &S,
    sched: &WeightSchedule,
    exec: Execution,
) -> Result<Vec<f64>> {
    let k = ensemble.current_step();
    if k == 0 || k >= ensemble.grid.steps() {
        return Err(Error::invalid(format!("weights are defined for interior steps, got {k}")));
    }
    if sched.gamma.len() != ensemble.grid.len() {
        return Err(Error::DimensionMismatch { expected: ensemble.grid.len(), found: sched.gamma.len() });
    }
    let ex = sched.exponents(&ensemble.grid, k);
    let current = score_points(scorer, &ensemble.points_at(k), exec);

    let unnormalized: Vec<f64> = if ex.prev == 0.0 && ex.current == 1.0 {
        current
    } else {
        let mut logw: Vec<f64> = vec![0.0; current.len()];
        if ex.current != 0.0 {
            logw.iter_mut().zip(&current).for_each(|(l, f)| *l += ex.current * f.ln());
        }
        if ex.prev != 0.0 {
            let prev = score_points(scorer, &ensemble.points_at(k - 1), exec);
            logw.iter_mut().zip(&prev).for_each(|(l, f)| *l += ex.prev * f.ln());
        }
        let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::DegenerateWeights { step: k });
        }
        logw.iter().map(|l| (l - max).exp()).collect()
    };
    normalize(unnormalized, k)
}

fn normalize(mut w: Vec<f64>, step: usize) -> Result<Vec<f64>> {
    let sum: f64 = w.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) || w.iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(Error::DegenerateWeights { step });
    }
    w.iter_mut().for_each(|v| *v /= sum);
    Ok(w)
}

/// Effective sample size `1 / Σ w_i²`.
pub fn ess(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// `n` ancestor indices drawn i.i.d. from `weights`.
pub fn multinomial_indices<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(weights).map_err(|e| Error::invalid(format!("resampling weights: {e}")))?;
    Ok((0..n).map(|_| dist.sample(rng)).collect())
}

pub fn resample_multinomial<R: Rng + ?Sized>(
    ensemble: &ParticleEnsemble,
    weights: &[f64],
    rng: &mut R,
) -> Result<ParticleEnsemble> {
    if weights.len() != ensemble.len() {
        return Err(Error::DimensionMismatch { expected: ensemble.len(), found: weights.len() });
    }
    let idx = multinomial_indices(weights, ensemble.len(), rng)?;
    Ok(ensemble.select(&idx))
}

#[derive(Clone, Debug)]
pub struct SmcOutput {
    /// First particle of the final ensemble.
    pub example: Path,
    pub paths: Vec<Path>,
    /// Final particle weights; uniform unless the last step skipped resampling.
    pub weights: Vec<f64>,
    /// ESS of the weights at each interior step, before resampling.
    pub ess: Vec<f64>,
}

/// Reusable sampler for one kernel, grid and weight schedule.
#[derive(Clone, Debug)]
pub struct SmcSampler {
    bridge: SequentialBridge,
    schedule: WeightSchedule,
    particles: usize,
    /// Resample only when ESS falls below `threshold * N`. `None` resamples every step.
    ess_threshold: Option<f64>,
    exec: Execution,
}

impl SmcSampler {
    pub fn new(params: &KernelParams, grid: &TimeGrid, schedule: WeightSchedule, particles: usize) -> Result<Self> {
        if particles == 0 {
            return Err(Error::invalid("need at least one particle"));
        }
        if schedule.gamma.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: schedule.gamma.len() });
        }
        Ok(SmcSampler {
            bridge: SequentialBridge::new(params, grid)?,
            schedule,
            particles,
            ess_threshold: None,
            exec: Execution::default(),
        })
    }

    pub fn with_ess_threshold(mut self, threshold: Option<f64>) -> Result<Self> {
        if let Some(t) = threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::invalid(format!("ess threshold must lie in [0, 1], got {t}")));
            }
        }
        self.ess_threshold = threshold;
        Ok(self)
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn grid(&self) -> &TimeGrid {
        self.bridge.grid()
    }

    pub fn run<S: Scorer + ?Sized>(&self, z0: &LatentPoint, zt: &LatentPoint, scorer: &S, rng: &RngState) -> Result<SmcOutput> {
        if let Some(d) = scorer.input_dim() {
            if d != z0.dim() {
                return Err(Error::DimensionMismatch { expected: d, found: z0.dim() });
            }
        }
        let grid = self.bridge.grid();
        let n = self.particles;
        let mut ensemble = ParticleEnsemble::new(z0, zt, grid, n)?;
        let mut carried = vec![1.0 / n as f64; n];
        let mut ess_trace = Vec::with_capacity(grid.steps().saturating_sub(1));
        for k in 1..grid.steps() {
            ensemble.extend(&self.bridge, rng, self.exec);
            let w = step_weights(&ensemble, scorer, &self.schedule, self.exec)?;
            let w = match self.ess_threshold {
                None => w,
                Some(_) => normalize(carried.iter().zip(&w).map(|(a, b)| a * b).collect(), k)?,
            };
            let e = ess(&w);
            ess_trace.push(e);
            let resample = self.ess_threshold.is_none_or(|t| e < t * n as f64);
            if resample {
                let mut rs = rng.substream(RESAMPLE_KEY, k as u64);
                ensemble = resample_multinomial(&ensemble, &w, &mut rs)?;
                carried.iter_mut().for_each(|c| *c = 1.0 / n as f64);
            } else {
                carried = w;
            }
        }
        let paths = ensemble.into_paths()?;
        Ok(SmcOutput { example: paths[0].clone(), paths, weights: carried, ess: ess_trace })
    }
}

/// One SMC run with default options; see [`SmcSampler`].
#[allow(clippy::too_many_arguments)]
pub fn smc_interpolate<S: Scorer + ?Sized>(
    z0: &LatentPoint,
    zt: &LatentPoint,
    params: &KernelParams,
    grid: &TimeGrid,
    scorer: &S,
    sched: &WeightSchedule,
    n_particles: usize,
    rng: &RngState,
) -> Result<SmcOutput> {
    SmcSampler::new(params, grid, sched.clone(), n_particles)?.run(z0, zt, scorer, rng)
}
