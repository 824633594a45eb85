//! Rendering of uncertain scalar volumes.
//!
//! Every voxel carries a probability distribution instead of a single value.
//! Distributions are interpolated along viewing rays in closed form (quantile
//! interpolation for nonparametric models, moment or convolution rules for the
//! parametric baselines) and classified by taking the expectation of a 1D or
//! 2D transfer function under the interpolated distribution.
//!
//! The crate is organised bottom-up:
//!
//! * [`volume`] and [`format`]: grids, distribution volumes and their files.
//! * [`density`]: per-voxel model estimation from ensembles or bricks.
//! * [`interp`]: distribution interpolation plus Monte Carlo oracles.
//! * [`classify`]: transfer functions and expected-color schemes.
//! * [`render`]: the CPU raycaster, quartile views, difference images.
//! * [`synth`]: synthetic fields and noisy ensembles.

pub mod classify;
pub mod density;
mod error;
pub mod format;
pub mod interp;
pub mod render;
pub mod rng;
pub mod synth;
pub mod volume;

pub use classify::{Rgba, TransferFunction1D, TransferFunction2D};
pub use density::{KdeConfig, ModelSpec};
pub use render::{Camera, Image, RenderJob, Scheme};
pub use error::{Error, Result};
pub use volume::{DistributionVolume, EnsembleVolume, GridGeometry, QuantilePdf, ScalarGrid, VoxelModel};

/// Width floor used when converting quantile widths to densities.
pub const WIDTH_EPSILON: f64 = 1e-12;
