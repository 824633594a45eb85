//! Per-voxel probability models estimated from samples.

pub mod gmm;
pub mod kde;

use rayon::prelude::*;

pub use gmm::{fit_gmm_em, EmFit, GmmComponent, GmmModel, DEFAULT_EM_ITERATIONS};
pub use kde::{estimate_quantiles, Bandwidth, KdeCdf, KdeConfig};

use crate::volume::quantile_count;
use crate::{DistributionVolume, EnsembleVolume, Error, GridGeometry, Result, ScalarGrid, VoxelModel};

fn require(samples: &[f64], n: usize) -> Result<()> {
    if samples.len() < n {
        return Err(Error::invalid(format!(
            "need at least {n} samples, got {}",
            samples.len()
        )));
    }
    Ok(())
}

pub fn fit_mean(samples: &[f64]) -> Result<f64> {
    require(samples, 1)?;
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// `(midrange, range)`.
pub fn fit_uniform(samples: &[f64]) -> Result<(f64, f64)> {
    require(samples, 1)?;
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    Ok((0.5 * (lo + hi), hi - lo))
}

/// `(mean, unbiased sigma)`.
pub fn fit_gaussian(samples: &[f64]) -> Result<(f64, f64)> {
    require(samples, 2)?;
    let mean = fit_mean(samples)?;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
    Ok((mean, var.sqrt()))
}

/// Inclusive empirical quantile: linear interpolation between order
/// statistics at position `p * (n - 1)`. `sorted` must be ascending.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let pos = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = (pos.floor() as usize).min(n - 1);
    let f = pos - i as f64;
    if i + 1 < n && f > 0.0 {
        sorted[i] + f * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// `q + 1` inclusive empirical quantiles of ascending samples.
pub fn empirical_quantiles(sorted: &[f64], q: usize) -> Vec<f64> {
    (0..=q)
        .map(|j| empirical_quantile(sorted, j as f64 / q as f64))
        .collect()
}

/// Which per-voxel model to fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    Mean,
    Uniform,
    Gaussian,
    Gmm { k: usize, max_iter: usize },
    Quantile { qval: f64, kde: KdeConfig },
    Samples,
}

impl ModelSpec {
    fn min_samples(&self) -> usize {
        match self {
            ModelSpec::Mean => 1,
            ModelSpec::Gmm { k, .. } => (*k).max(2),
            _ => 2,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Quantile { qval, kde } => {
                quantile_count(*qval)?;
                kde.validate()
            }
            ModelSpec::Gmm { k: 0, .. } => Err(Error::invalid("gmm needs k >= 1")),
            _ => Ok(()),
        }
    }
}

enum VoxelFit {
    Scalar(f64),
    Pair(f64, f64),
    Many(Vec<f64>),
    Mixture(Vec<GmmComponent>),
}

fn fit_voxel(samples: &[f64], spec: &ModelSpec) -> Result<VoxelFit> {
    Ok(match spec {
        ModelSpec::Mean => VoxelFit::Scalar(fit_mean(samples)?),
        ModelSpec::Uniform => {
            let (c, w) = fit_uniform(samples)?;
            VoxelFit::Pair(c, w)
        }
        ModelSpec::Gaussian => {
            let (m, s) = fit_gaussian(samples)?;
            VoxelFit::Pair(m, s)
        }
        ModelSpec::Gmm { k, max_iter } => {
            VoxelFit::Mixture(fit_gmm_em(samples, *k, *max_iter)?.model.components)
        }
        ModelSpec::Quantile { qval, kde } => {
            VoxelFit::Many(estimate_quantiles(samples, *qval, kde)?.into_boundaries())
        }
        ModelSpec::Samples => VoxelFit::Many(samples.to_vec()),
    })
}

/// Fits every voxel independently from the samples produced by `gather`.
/// Parallel over voxels; the result does not depend on the worker count.
fn fit_volume(
    geometry: GridGeometry,
    spec: &ModelSpec,
    sample_count: usize,
    gather: impl Fn(usize, &mut Vec<f64>) + Sync,
) -> Result<DistributionVolume> {
    spec.validate()?;
    if sample_count < spec.min_samples() {
        return Err(Error::invalid(format!(
            "{spec:?} needs at least {} samples per voxel, got {sample_count}",
            spec.min_samples()
        )));
    }
    let fits: Vec<VoxelFit> = (0..geometry.voxel_count())
        .into_par_iter()
        .map_init(Vec::new, |buf, v| {
            gather(v, buf);
            fit_voxel(buf, spec).map_err(|e| Error::Voxel {
                index: v,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let model = match spec {
        ModelSpec::Mean => VoxelModel::MeanField(
            fits.into_iter()
                .map(|f| match f {
                    VoxelFit::Scalar(x) => x,
                    _ => unreachable!(),
                })
                .collect(),
        ),
        ModelSpec::Uniform | ModelSpec::Gaussian => {
            let (a, b): (Vec<f64>, Vec<f64>) = fits
                .into_iter()
                .map(|f| match f {
                    VoxelFit::Pair(a, b) => (a, b),
                    _ => unreachable!(),
                })
                .unzip();
            if matches!(spec, ModelSpec::Uniform) {
                VoxelModel::Uniform {
                    center: a,
                    width: b,
                }
            } else {
                VoxelModel::Gaussian { mean: a, sigma: b }
            }
        }
        ModelSpec::Gmm { k, .. } => VoxelModel::Gmm {
            k: *k,
            components: fits
                .into_iter()
                .flat_map(|f| match f {
                    VoxelFit::Mixture(c) => c,
                    _ => unreachable!(),
                })
                .collect(),
        },
        ModelSpec::Quantile { qval, .. } => VoxelModel::Quantile {
            qval: *qval,
            boundaries: flatten(fits),
        },
        ModelSpec::Samples => VoxelModel::Samples {
            m: sample_count,
            samples: flatten(fits),
        },
    };
    DistributionVolume::new(geometry, model)
}

fn flatten(fits: Vec<VoxelFit>) -> Vec<f64> {
    fits.into_iter()
        .flat_map(|f| match f {
            VoxelFit::Many(v) => v,
            _ => unreachable!(),
        })
        .collect()
}

/// Fits one model per voxel from the ensemble members at that voxel.
pub fn build_distribution_volume(ensemble: &EnsembleVolume, spec: &ModelSpec) -> Result<DistributionVolume> {
    fit_volume(ensemble.geometry, spec, ensemble.member_count(), |v, buf| {
        ensemble.voxel_samples(v, buf)
    })
}

/// Geometry of the grid obtained by collapsing `brick`-sized blocks of `hi`
/// into single voxels placed at the brick centers.
pub fn brick_geometry(hi: &GridGeometry, brick: [usize; 3]) -> Result<GridGeometry> {
    for a in 0..3 {
        if brick[a] == 0 || !hi.dims[a].is_multiple_of(brick[a]) {
            return Err(Error::invalid(format!(
                "dims {:?} are not divisible by brick {brick:?}",
                hi.dims
            )));
        }
    }
    GridGeometry::new(
        std::array::from_fn(|a| hi.dims[a] / brick[a]),
        std::array::from_fn(|a| hi.spacing[a] * brick[a] as f64),
        std::array::from_fn(|a| hi.origin[a] + 0.5 * (brick[a] - 1) as f64 * hi.spacing[a]),
    )
}

/// Hixel-style reduction: each brick's values become the sample set of one
/// low-resolution voxel. Also returns the per-brick mean grid.
pub fn downsample_hixel(
    hi: &ScalarGrid,
    brick: [usize; 3],
    spec: &ModelSpec,
) -> Result<(DistributionVolume, ScalarGrid)> {
    let lo = brick_geometry(&hi.geometry, brick)?;
    let gather = |v: usize, buf: &mut Vec<f64>| {
        let [bi, bj, bk] = lo.unravel(v);
        buf.clear();
        for k in 0..brick[2] {
            for j in 0..brick[1] {
                for i in 0..brick[0] {
                    buf.push(hi.at([bi * brick[0] + i, bj * brick[1] + j, bk * brick[2] + k]));
                }
            }
        }
    };
    let count = brick.iter().product();
    let volume = fit_volume(lo, spec, count, gather)?;
    let means = fit_volume(lo, &ModelSpec::Mean, count, gather)?;
    let VoxelModel::MeanField(values) = means.into_model() else {
        unreachable!()
    };
    Ok((volume, ScalarGrid { geometry: lo, values }))
}
