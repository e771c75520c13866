//! Multivariate-normal machinery: jittered Cholesky factorization, exact
//! Gaussian conditioning and seeded sampling.
//!
//! Normal variates are drawn with `rand_distr::StandardNormal` (ziggurat
//! method) from a ChaCha8 stream, so every draw is a pure function of the
//! `(seed, stream)` pair of the [`RngState`] it came from.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernel::CovMatrix;

pub const DEFAULT_JITTER: f64 = 1e-8;

/// Jitter escalation: `0`, then `jitter * 10^i` for `i = 0..=JITTER_DECADES`.
const JITTER_DECADES: i32 = 6;

/// Seeded, splittable random stream.
#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl RngState {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngState { seed, stream, rng }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Independent stream keyed by `(a, b)`. Depends only on this state's
    /// `(seed, stream)`, not on how far it has been advanced.
    pub fn substream(&self, a: u64, b: u64) -> RngState {
        let s = splitmix64(splitmix64(splitmix64(self.stream) ^ a) ^ b.rotate_left(32));
        RngState::new(self.seed, s)
    }
}

impl RngCore for RngState {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Cholesky factor of `M + jitter * I`.
#[derive(Clone, Debug)]
pub struct JitteredCholesky {
    chol: Cholesky<f64, Dyn>,
    jitter: f64,
}

impl JitteredCholesky {
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }
}

/// Factorizes `m + j I` for the smallest `j` in `{0, jitter, 10 jitter, ...,
/// 1e6 jitter}` that succeeds.
pub fn cholesky_jitter(m: &DMatrix<f64>, jitter: f64) -> Result<JitteredCholesky> {
    if !(jitter.is_finite() && jitter >= 0.0) {
        return Err(Error::invalid(format!("jitter must be non-negative, got {jitter}")));
    }
    let n = m.nrows();
    let mut schedule = vec![0.0];
    if jitter > 0.0 {
        schedule.extend((0..=JITTER_DECADES).map(|i| jitter * 10f64.powi(i)));
    }
    for &j in &schedule {
        let mut a = m.clone();
        for i in 0..n {
            a[(i, i)] += j;
        }
        if let Some(chol) = Cholesky::new(a) {
            return Ok(JitteredCholesky { chol, jitter: j });
        }
    }
    let tried = schedule[schedule.len() - 1];
    Err(Error::FactorizationFailure { size: n, max_jitter: tried })
}

/// Law of the `free` block given the `given` block of a zero-mean Gaussian.
#[derive(Clone, Debug)]
pub struct GaussianCond {
    /// `Σ_fg Σ_gg^{-1}`, shape `|free| x |given|`.
    pub mean_map: DMatrix<f64>,
    /// `Σ_ff - Σ_fg Σ_gg^{-1} Σ_gf`.
    pub cond_var: DMatrix<f64>,
    pub free: Vec<usize>,
    pub given: Vec<usize>,
    /// Jitter that was needed to factor `Σ_gg`.
    pub jitter: f64,
}

impl GaussianCond {
    /// Conditional mean for observed values of the given block.
    pub fn mean(&self, observed: &[f64]) -> DVector<f64> {
        assert_eq!(observed.len(), self.given.len(), "observed block size");
        &self.mean_map * DVector::from_column_slice(observed)
    }
}

pub fn condition(joint: &CovMatrix, free: &[usize], given: &[usize]) -> Result<GaussianCond> {
    condition_with_jitter(joint, free, given, DEFAULT_JITTER)
}

pub fn condition_with_jitter(joint: &CovMatrix, free: &[usize], given: &[usize], jitter: f64) -> Result<GaussianCond> {
    let n = joint.size();
    let mut seen = vec![false; n];
    for &i in free.iter().chain(given) {
        if i >= n {
            return Err(Error::invalid(format!("index {i} out of range for {n}x{n} covariance")));
        }
        if seen[i] {
            return Err(Error::invalid(format!("index {i} repeated or in both blocks")));
        }
        seen[i] = true;
    }
    let s = joint.matrix();
    let sub = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |i, j| s[(rows[i], cols[j])]);
    let s_ff = sub(free, free);
    if given.is_empty() {
        return Ok(GaussianCond {
            mean_map: DMatrix::zeros(free.len(), 0),
            cond_var: s_ff,
            free: free.to_vec(),
            given: Vec::new(),
            jitter: 0.0,
        });
    }
    let s_gg = sub(given, given);
    let s_gf = sub(given, free);
    let chol = cholesky_jitter(&s_gg, jitter)?;
    // Σ_gg^{-1} Σ_gf, shape |given| x |free|
    let coef = chol.solve(&s_gf);
    let mean_map = coef.transpose();
    let mut cond_var = s_ff - s_gf.transpose() * &coef;
    let k = cond_var.nrows();
    for i in 0..k {
        for j in (i + 1)..k {
            let v = 0.5 * (cond_var[(i, j)] + cond_var[(j, i)]);
            cond_var[(i, j)] = v;
            cond_var[(j, i)] = v;
        }
    }
    Ok(GaussianCond { mean_map, cond_var, free: free.to_vec(), given: given.to_vec(), jitter: chol.jitter() })
}

/// `mean + L ε` with `ε` i.i.d. standard normal.
pub fn sample_mvn<R: Rng + ?Sized>(mean: &DVector<f64>, chol: &DMatrix<f64>, rng: &mut R) -> DVector<f64> {
    assert_eq!(mean.len(), chol.nrows(), "mean/factor dimension");
    let eps = DVector::from_fn(chol.ncols(), |_, _| standard_normal(rng));
    mean + chol * eps
}
