//! Synthetic latent datasets with the geometries typically seen in trained
//! autoencoders: data concentrated on a one-dimensional curve in a 2-D latent
//! space, or on a thin shell of radius `sqrt(d)`.

use std::f64::consts::PI;

use rand::Rng;

use crate::bridge::LatentPoint;
use crate::dataset::LatentDataset;
use crate::error::{Error, Result};
use crate::mvn::{standard_normal, RngState};

#[derive(Clone, Debug, PartialEq)]
pub enum SynthKind {
    /// Points `r (cos θ, sin θ)` with `θ` uniform on `[start, start + span]`.
    Arc { radius: f64, start: f64, span: f64 },
    /// Arc on an ellipse with semi-axes `radius` and `radius * axis_ratio`.
    Ellipse { radius: f64, axis_ratio: f64, start: f64, span: f64 },
    /// `z / |z| * (sqrt(d) + noise)` for `z ~ N(0, I_d)`.
    GaussianShell,
}

impl SynthKind {
    /// Unit-radius 270° arc whose 90° gap is centred on the positive y-axis.
    pub fn default_arc() -> Self {
        SynthKind::Arc { radius: 1.0, start: PI / 2.0 + PI / 4.0, span: 1.5 * PI }
    }

    pub fn default_ellipse() -> Self {
        SynthKind::Ellipse { radius: 1.0, axis_ratio: 0.5, start: PI / 2.0 + PI / 4.0, span: 1.5 * PI }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub dim: usize,
    pub n_points: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn arc(n_points: usize, noise_sigma: f64, seed: u64) -> Self {
        SynthSpec { kind: SynthKind::default_arc(), dim: 2, n_points, noise_sigma, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 {
            return Err(Error::invalid("n_points must be at least 1"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::invalid("noise sigma must be non-negative"));
        }
        if self.dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        match &self.kind {
            SynthKind::Arc { radius, span, .. } | SynthKind::Ellipse { radius, span, .. } => {
                if self.dim != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, found: self.dim });
                }
                if !(radius.is_finite() && *radius > 0.0) || !(span.is_finite() && *span >= 0.0) {
                    return Err(Error::invalid("arc radius must be positive and span non-negative"));
                }
                if let SynthKind::Ellipse { axis_ratio, .. } = &self.kind {
                    if !(axis_ratio.is_finite() && *axis_ratio > 0.0) {
                        return Err(Error::invalid("axis ratio must be positive"));
                    }
                }
            }
            SynthKind::GaussianShell => {}
        }
        Ok(())
    }
}

fn curve_point<R: Rng + ?Sized>(rx: f64, ry: f64, start: f64, span: f64, sigma: f64, rng: &mut R) -> Vec<f64> {
    let theta = start + span * rng.random::<f64>();
    let mut p = vec![rx * theta.cos(), ry * theta.sin()];
    if sigma > 0.0 {
        p.iter_mut().for_each(|v| *v += sigma * standard_normal(rng));
    }
    p
}

pub fn generate(spec: &SynthSpec) -> Result<LatentDataset> {
    spec.validate()?;
    let mut rng = RngState::new(spec.seed, 0);
    let sigma = spec.noise_sigma;
    let points = (0..spec.n_points)
        .map(|_| match spec.kind {
            SynthKind::Arc { radius, start, span } => curve_point(radius, radius, start, span, sigma, &mut rng),
            SynthKind::Ellipse { radius, axis_ratio, start, span } => {
                curve_point(radius, radius * axis_ratio, start, span, sigma, &mut rng)
            }
            SynthKind::GaussianShell => {
                let target = (spec.dim as f64).sqrt() + sigma * standard_normal(&mut rng);
                loop {
                    let z: Vec<f64> = (0..spec.dim).map(|_| standard_normal(&mut rng)).collect();
                    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        break z.into_iter().map(|v| v / norm * target).collect();
                    }
                }
            }
        })
        .map(LatentPoint::new)
        .collect();
    LatentDataset::new(points)
}
