//! Stochastic interpolation between latent points.
//!
//! Paths are drawn from a Gaussian bridge built on the stationary kernel
//! `exp(-beta |h|^alpha)` and, optionally, reweighted toward regions a trained
//! discriminator scores as data-like, using sequential Monte Carlo.
//!
//! ```
//! use pfbi::{KernelParams, LatentPoint, RngState, TimeGrid, sample_bridge};
//!
//! let params = KernelParams::new(2.0, 5.0).unwrap();
//! let grid = TimeGrid::equidistant(1.0, 16).unwrap();
//! let z0 = LatentPoint::new(vec![1.0, 0.0]);
//! let zt = LatentPoint::new(vec![-1.0, 0.0]);
//! let path = sample_bridge(&z0, &zt, &params, &grid, &mut RngState::from_seed(7)).unwrap();
//! assert_eq!(path.points().len(), 17);
//! assert_eq!(path.end(), &zt);
//! ```

pub mod bridge;
pub mod cli;
pub mod dataset;
pub mod discriminator;
pub mod error;
pub mod exec;
pub mod kernel;
pub mod method;
pub mod metrics;
pub mod mvn;
pub mod smc;
pub mod synthdata;

pub use bridge::{bridge_step, linear_path, sample_bridge, sample_bridge_joint_oracle, JointBridge, LatentPoint, Path, SequentialBridge};
pub use dataset::LatentDataset;
pub use discriminator::{load_net, save_net, train, ConstantScorer, DiscriminatorNet, PriorSpec, Scorer, TrainConfig};
pub use error::{Error, Result};
pub use exec::Execution;
pub use kernel::{build_covariance, kernel_eval, CovMatrix, KernelParams, TimeGrid};
pub use method::{GaussianSampler, LinearSampler, PathSampler, SmcPathSampler};
pub use metrics::{evaluate_method, mean_score, smoothness_score, variability_score, ScoreMode, ScoreReport};
pub use mvn::{cholesky_jitter, condition, sample_mvn, GaussianCond, RngState};
pub use smc::{ess, resample_multinomial, smc_interpolate, step_weights, ParticleEnsemble, SmcOutput, SmcSampler, WeightSchedule};
pub use synthdata::{generate, SynthKind, SynthSpec};
