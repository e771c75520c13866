//! Interpolation methods behind one sampling interface: linear, plain
//! Gaussian bridge, and discriminator-guided SMC.

use crate::bridge::{linear_path, LatentPoint, Path, SequentialBridge};
use crate::discriminator::Scorer;
use crate::error::Result;
use crate::kernel::{KernelParams, TimeGrid};
use crate::mvn::RngState;
use crate::smc::SmcSampler;

pub trait PathSampler: Sync {
    fn name(&self) -> &str;

    /// Draws one path; all randomness comes from `rng`.
    fn sample(&self, z0: &LatentPoint, zt: &LatentPoint, rng: &RngState) -> Result<Path>;

    /// Particle count reported alongside scores (0 for deterministic methods).
    fn particles(&self) -> usize {
        0
    }
}

#[derive(Clone, Debug)]
pub struct LinearSampler {
    grid: TimeGrid,
}

impl LinearSampler {
    pub fn new(grid: &TimeGrid) -> Self {
        LinearSampler { grid: grid.clone() }
    }
}

impl PathSampler for LinearSampler {
    fn name(&self) -> &str {
        "linear"
    }

    fn sample(&self, z0: &LatentPoint, zt: &LatentPoint, _rng: &RngState) -> Result<Path> {
        linear_path(z0, zt, &self.grid)
    }
}

/// Plain Gaussian bridge; with `mean_of > 1` returns the pointwise mean of that many draws.
#[derive(Clone, Debug)]
pub struct GaussianSampler {
    bridge: SequentialBridge,
    mean_of: usize,
}

impl GaussianSampler {
    pub fn new(params: &KernelParams, grid: &TimeGrid) -> Result<Self> {
        Ok(GaussianSampler { bridge: SequentialBridge::new(params, grid)?, mean_of: 1 })
    }

    pub fn with_mean_of(mut self, k: usize) -> Self {
        self.mean_of = k.max(1);
        self
    }
}

impl PathSampler for GaussianSampler {
    fn name(&self) -> &str {
        "gaussian"
    }

    fn sample(&self, z0: &LatentPoint, zt: &LatentPoint, rng: &RngState) -> Result<Path> {
        let mut rng = rng.clone();
        if self.mean_of == 1 {
            return self.bridge.sample(z0, zt, &mut rng);
        }
        let draws = (0..self.mean_of).map(|_| self.bridge.sample(z0, zt, &mut rng)).collect::<Result<Vec<_>>>()?;
        Path::average(&draws)
    }

    fn particles(&self) -> usize {
        1
    }
}

pub struct SmcPathSampler<'a, S: Scorer + ?Sized> {
    sampler: SmcSampler,
    scorer: &'a S,
}

impl<'a, S: Scorer + ?Sized> SmcPathSampler<'a, S> {
    pub fn new(sampler: SmcSampler, scorer: &'a S) -> Self {
        SmcPathSampler { sampler, scorer }
    }
}

impl<S: Scorer + ?Sized> PathSampler for SmcPathSampler<'_, S> {
    fn name(&self) -> &str {
        "smc"
    }

    fn sample(&self, z0: &LatentPoint, zt: &LatentPoint, rng: &RngState) -> Result<Path> {
        Ok(self.sampler.run(z0, zt, self.scorer, rng)?.example)
    }

    fn particles(&self) -> usize {
        self.sampler.particles()
    }
}
