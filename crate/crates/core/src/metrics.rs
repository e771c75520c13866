//! Latent-space quality scores for interpolation paths.
//!
//! * mean score: nearest-data Euclidean distance of the midpoint, or averaged
//!   over all interior points;
//! * smoothness: largest turning angle between consecutive path segments;
//! * variability: per-coordinate sample std of midpoints over repeated
//!   interpolations, averaged over coordinates.
//!
//! Standard deviations use the `n - 1` estimator.

use std::fmt;
use std::str::FromStr;

use crate::bridge::{LatentPoint, Path};
use crate::dataset::LatentDataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::method::PathSampler;
use crate::mvn::RngState;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScoreMode {
    InteriorAverage,
    Midpoint,
}

impl FromStr for ScoreMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior" | "interior-average" => Ok(ScoreMode::InteriorAverage),
            "midpoint" => Ok(ScoreMode::Midpoint),
            _ => Err(Error::invalid(format!("unknown score mode `{s}` (interior|midpoint)"))),
        }
    }
}

impl fmt::Display for ScoreMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreMode::InteriorAverage => "interior",
            ScoreMode::Midpoint => "midpoint",
        })
    }
}

pub fn mean_score(path: &Path, data: &LatentDataset, mode: ScoreMode) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if path.dim() != data.dim() {
        return Err(Error::DimensionMismatch { expected: data.dim(), found: path.dim() });
    }
    Ok(match mode {
        ScoreMode::Midpoint => data.nearest_distance(path.midpoint()),
        ScoreMode::InteriorAverage => {
            let interior = path.interior();
            interior.iter().map(|p| data.nearest_distance(p)).sum::<f64>() / interior.len() as f64
        }
    })
}

/// Angle between `u` and `v` in `[0, π]`; 0 if either has zero length.
fn angle_between(u: &[f64], v: &[f64]) -> f64 {
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    // 2 atan2(|û - v̂|, |û + v̂|) stays accurate near 0 and π, unlike acos
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (a, b) = (a / nu, b / nv);
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

pub fn smoothness_score(path: &Path) -> f64 {
    let pts = path.points();
    let seg = |k: usize| -> Vec<f64> { pts[k + 1].iter().zip(pts[k].iter()).map(|(a, b)| a - b).collect() };
    (1..pts.len() - 1).map(|k| angle_between(&seg(k), &seg(k - 1))).fold(0.0, f64::max)
}

/// Running mean and `n - 1` standard deviation (Welford), exact for constant input.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunningStats {
    n: usize,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample std; 0 with fewer than two observations.
    pub fn std(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0).sqrt()
        }
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = RunningStats::default();
        iter.into_iter().for_each(|x| s.push(x));
        s
    }
}

pub fn variability_score(midpoints: &[LatentPoint]) -> Result<f64> {
    if midpoints.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, found: midpoints.len() });
    }
    let d = midpoints[0].dim();
    if let Some(p) = midpoints.iter().find(|p| p.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
    }
    let total: f64 = (0..d).map(|c| midpoints.iter().map(|p| p[c]).collect::<RunningStats>().std()).sum();
    Ok(total / d as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreReport {
    pub mean_score: f64,
    pub mean_std: f64,
    pub smoothness: f64,
    pub smoothness_std: f64,
    /// NaN when fewer than two repeats per pair were drawn.
    pub variability: f64,
    pub n_interpolations: usize,
}

/// Scores a method over endpoint pairs.
///
/// Each pair is sampled `repeats` times with streams keyed by `(pair, repeat)`.
/// Mean and smoothness scores are averaged over repeats within a pair, then
/// summarized (mean, std) across pairs; variability is computed per pair from
/// the repeated midpoints and averaged over pairs.
pub fn evaluate_method<M: PathSampler + ?Sized>(
    method: &M,
    endpoints: &[(LatentPoint, LatentPoint)],
    data: &LatentDataset,
    repeats: usize,
    mode: ScoreMode,
    rng: &RngState,
    exec: Execution,
) -> Result<ScoreReport> {
    if endpoints.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, found: 0 });
    }
    if repeats == 0 {
        return Err(Error::invalid("repeats must be at least 1"));
    }
    let per_pair = exec.try_map(endpoints.len(), |i| -> Result<(f64, f64, Option<f64>)> {
        let (z0, zt) = &endpoints[i];
        let mut mean = RunningStats::default();
        let mut smooth = RunningStats::default();
        let mut mids = Vec::with_capacity(repeats);
        for r in 0..repeats {
            let path = method.sample(z0, zt, &rng.substream(i as u64, r as u64))?;
            mean.push(mean_score(&path, data, mode)?);
            smooth.push(smoothness_score(&path));
            mids.push(path.midpoint().clone());
        }
        let var = if repeats >= 2 { Some(variability_score(&mids)?) } else { None };
        Ok((mean.mean(), smooth.mean(), var))
    })?;
    let means: RunningStats = per_pair.iter().map(|r| r.0).collect();
    let smooth: RunningStats = per_pair.iter().map(|r| r.1).collect();
    let variability = if repeats >= 2 {
        per_pair.iter().filter_map(|r| r.2).collect::<RunningStats>().mean()
    } else {
        f64::NAN
    };
    Ok(ScoreReport {
        mean_score: means.mean(),
        mean_std: means.std(),
        smoothness: smooth.mean(),
        smoothness_std: smooth.std(),
        variability,
        n_interpolations: endpoints.len(),
    })
}

/// One labelled line of an evaluation report.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub method: String,
    pub horizon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub particles: usize,
    pub report: ScoreReport,
}

pub const REPORT_HEADER: &str = "method,T,alpha,beta,N,mean_score,mean_std,smoothness,smoothness_std,variability";

impl ReportRow {
    pub fn to_csv_line(&self) -> String {
        let r = &self.report;
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.method, self.horizon, self.alpha, self.beta, self.particles, r.mean_score, r.mean_std, r.smoothness, r.smoothness_std, r.variability
        )
    }

    pub fn parse_csv_line(line: &str, n_interpolations: usize) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 10 {
            return Err(Error::parse(0, format!("report row needs 10 fields, got {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::parse(0, format!("`{s}`: {e}")));
        Ok(ReportRow {
            method: f[0].to_string(),
            horizon: num(f[1])?,
            alpha: num(f[2])?,
            beta: num(f[3])?,
            particles: f[4].parse().map_err(|_| Error::parse(0, format!("bad particle count `{}`", f[4])))?,
            report: ScoreReport {
                mean_score: num(f[5])?,
                mean_std: num(f[6])?,
                smoothness: num(f[7])?,
                smoothness_std: num(f[8])?,
                variability: num(f[9])?,
                n_interpolations,
            },
        })
    }
}
