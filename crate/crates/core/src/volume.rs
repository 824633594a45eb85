//! Deterministic and distribution-valued volumes.
//!
//! All voxel arrays are stored x-fastest: the linear index of `(i, j, k)` is
//! `i + nx * (j + ny * k)`.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::density::gmm::{GmmComponent, GmmModel};
use crate::density::empirical_quantiles;
use crate::{Error, Result, WIDTH_EPSILON};

/// Number of standard deviations at which Gaussian tails are clamped when a
/// Gaussian is reduced to finite quantile boundaries.
pub const GAUSSIAN_TAIL_CLAMP: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
}

impl GridGeometry {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::invalid(format!("zero dimension in {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::invalid(format!("non-positive spacing {spacing:?}")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::invalid("non-finite origin"));
        }
        Ok(Self {
            dims,
            spacing,
            origin,
        })
    }

    /// Unit spacing, origin at zero.
    pub fn unit(dims: [usize; 3]) -> Self {
        Self {
            dims,
            spacing: [1.0; 3],
            origin: [0.0; 3],
        }
    }

    pub fn voxel_count(&self) -> usize {
        self.dims.iter().product()
    }

    #[inline]
    pub fn linear(&self, [i, j, k]: [usize; 3]) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    pub fn check_index(&self, index: [usize; 3]) -> Result<usize> {
        if (0..3).any(|a| index[a] >= self.dims[a]) {
            return Err(Error::OutOfBounds {
                index,
                dims: self.dims,
            });
        }
        Ok(self.linear(index))
    }

    pub fn world_position(&self, index: [usize; 3]) -> [f64; 3] {
        std::array::from_fn(|a| self.origin[a] + index[a] as f64 * self.spacing[a])
    }

    /// World-space bounding box spanned by the voxel centers.
    pub fn bounds(&self) -> ([f64; 3], [f64; 3]) {
        let hi = std::array::from_fn(|a| {
            self.origin[a] + (self.dims[a].saturating_sub(1)) as f64 * self.spacing[a]
        });
        (self.origin, hi)
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// A deterministic scalar field on a regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    pub geometry: GridGeometry,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn new(geometry: GridGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.voxel_count() {
            return Err(Error::invalid(format!(
                "{} values for dims {:?}",
                values.len(),
                geometry.dims
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at voxel {pos}")));
        }
        Ok(Self { geometry, values })
    }

    pub fn from_fn(geometry: GridGeometry, mut f: impl FnMut([usize; 3]) -> f64) -> Self {
        let values = (0..geometry.voxel_count())
            .map(|idx| f(geometry.unravel(idx)))
            .collect();
        Self { geometry, values }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry.dims
    }

    #[inline]
    pub fn at(&self, index: [usize; 3]) -> f64 {
        self.values[self.geometry.linear(index)]
    }

    pub fn range(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Piecewise-constant density given by `q + 1` equal-mass boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantilePdf {
    qval: f64,
    boundaries: Vec<f64>,
}

/// Resolves `q` from a quantile value, requiring `1 / qval` to be an integer.
pub fn quantile_count(qval: f64) -> Result<usize> {
    if !(qval > 0.0 && qval <= 1.0) {
        return Err(Error::invalid(format!("qval {qval} outside (0, 1]")));
    }
    let q = (1.0 / qval).round();
    if (q * qval - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("qval {qval} is not a unit fraction")));
    }
    Ok(q as usize)
}

impl QuantilePdf {
    pub fn new(qval: f64, boundaries: Vec<f64>) -> Result<Self> {
        let q = quantile_count(qval)?;
        if boundaries.len() != q + 1 {
            return Err(Error::invalid(format!(
                "qval {qval} needs {} boundaries, got {}",
                q + 1,
                boundaries.len()
            )));
        }
        check_boundaries(&boundaries)?;
        Ok(Self { qval, boundaries })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn new_unchecked(qval: f64, boundaries: Vec<f64>) -> Self {
        debug_assert_eq!(boundaries.len(), quantile_count(qval).unwrap() + 1);
        Self { qval, boundaries }
    }

    /// Every boundary at `x`.
    pub fn point_mass(qval: f64, x: f64) -> Result<Self> {
        let q = quantile_count(qval)?;
        Self::new(qval, vec![x; q + 1])
    }

    pub fn qval(&self) -> f64 {
        self.qval
    }

    pub fn q(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn into_boundaries(self) -> Vec<f64> {
        self.boundaries
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.boundaries.windows(2).map(|w| w[1] - w[0])
    }

    /// Piece densities `qval / max(width, eps)`.
    pub fn densities(&self) -> Vec<f64> {
        self.widths()
            .map(|w| self.qval / w.max(WIDTH_EPSILON))
            .collect()
    }

    /// Mean of the piecewise-constant density: average of piece midpoints.
    pub fn mean(&self) -> f64 {
        self.boundaries
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .sum::<f64>()
            * self.qval
    }

    /// CDF of the piecewise-constant density (piecewise linear between
    /// boundaries; a zero-width piece is a jump).
    pub fn cdf(&self, x: f64) -> f64 {
        let b = &self.boundaries;
        if x < b[0] {
            return 0.0;
        }
        if x >= b[b.len() - 1] {
            return 1.0;
        }
        // last boundary <= x
        let j = b.partition_point(|&v| v <= x) - 1;
        let w = b[j + 1] - b[j];
        let frac = if w > 0.0 { (x - b[j]) / w } else { 1.0 };
        (j as f64 + frac) * self.qval
    }
}

pub(crate) fn check_boundaries(b: &[f64]) -> Result<()> {
    if let Some(p) = b.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite boundary at {p}")));
    }
    if let Some(p) = b.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::invalid(format!(
            "boundaries decrease at {p}: {} > {}",
            b[p],
            b[p + 1]
        )));
    }
    Ok(())
}

/// Per-voxel probability model of a whole volume.
#[derive(Debug, Clone, PartialEq)]
pub enum VoxelModel {
    MeanField(Vec<f64>),
    Uniform {
        center: Vec<f64>,
        width: Vec<f64>,
    },
    Gaussian {
        mean: Vec<f64>,
        sigma: Vec<f64>,
    },
    /// `k` components per voxel, voxel-major.
    Gmm {
        k: usize,
        components: Vec<GmmComponent>,
    },
    /// `q + 1` boundaries per voxel, voxel-major.
    Quantile {
        qval: f64,
        boundaries: Vec<f64>,
    },
    /// `m` raw samples per voxel, voxel-major.
    Samples {
        m: usize,
        samples: Vec<f64>,
    },
}

impl VoxelModel {
    pub fn name(&self) -> &'static str {
        match self {
            VoxelModel::MeanField(_) => "mean-field",
            VoxelModel::Uniform { .. } => "uniform",
            VoxelModel::Gaussian { .. } => "gaussian",
            VoxelModel::Gmm { .. } => "gmm",
            VoxelModel::Quantile { .. } => "quantile",
            VoxelModel::Samples { .. } => "samples",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionVolume {
    pub geometry: GridGeometry,
    model: VoxelModel,
}

impl DistributionVolume {
    /// Validates every per-voxel payload.
    pub fn new(geometry: GridGeometry, model: VoxelModel) -> Result<Self> {
        let n = geometry.voxel_count();
        let want = |len: usize, per: usize, what: &str| {
            if len == n * per {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "{what}: {len} entries for {n} voxels x {per}"
                )))
            }
        };
        let finite = |v: &[f64], what: &str| match v.iter().position(|x| !x.is_finite()) {
            Some(p) => Err(Error::invalid(format!("{what}: non-finite entry {p}"))),
            None => Ok(()),
        };
        let nonneg = |v: &[f64], what: &str| match v.iter().position(|&x| x < 0.0) {
            Some(p) => Err(Error::invalid(format!("{what}: negative entry at voxel {p}"))),
            None => Ok(()),
        };
        match &model {
            VoxelModel::MeanField(v) => {
                want(v.len(), 1, "mean")?;
                finite(v, "mean")?;
            }
            VoxelModel::Uniform { center, width } => {
                want(center.len(), 1, "center")?;
                want(width.len(), 1, "width")?;
                finite(center, "center")?;
                finite(width, "width")?;
                nonneg(width, "width")?;
            }
            VoxelModel::Gaussian { mean, sigma } => {
                want(mean.len(), 1, "mean")?;
                want(sigma.len(), 1, "sigma")?;
                finite(mean, "mean")?;
                finite(sigma, "sigma")?;
                nonneg(sigma, "sigma")?;
            }
            VoxelModel::Gmm { k, components } => {
                if *k == 0 {
                    return Err(Error::invalid("gmm with zero components"));
                }
                want(components.len(), *k, "gmm")?;
                for (v, chunk) in components.chunks(*k).enumerate() {
                    GmmModel::validate(chunk).map_err(|e| Error::Voxel {
                        index: v,
                        source: Box::new(e),
                    })?;
                }
            }
            VoxelModel::Quantile { qval, boundaries } => {
                let q = quantile_count(*qval)?;
                want(boundaries.len(), q + 1, "quantile boundaries")?;
                for (v, chunk) in boundaries.chunks(q + 1).enumerate() {
                    check_boundaries(chunk).map_err(|e| Error::Voxel {
                        index: v,
                        source: Box::new(e),
                    })?;
                }
            }
            VoxelModel::Samples { m, samples } => {
                if *m == 0 {
                    return Err(Error::invalid("sample model with zero samples"));
                }
                want(samples.len(), *m, "samples")?;
                finite(samples, "samples")?;
            }
        }
        Ok(Self { geometry, model })
    }

    pub fn model(&self) -> &VoxelModel {
        &self.model
    }

    pub fn into_model(self) -> VoxelModel {
        self.model
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry.dims
    }

    /// Quantile boundaries of voxel `idx` for quantile volumes.
    #[inline]
    pub fn quantile_slice(&self, idx: usize) -> Option<&[f64]> {
        match &self.model {
            VoxelModel::Quantile { qval, boundaries } => {
                let stride = (1.0 / qval).round() as usize + 1;
                Some(&boundaries[idx * stride..(idx + 1) * stride])
            }
            _ => None,
        }
    }

    /// Expected value of every voxel, as a deterministic grid.
    pub fn mean_grid(&self) -> ScalarGrid {
        let n = self.geometry.voxel_count();
        let values = match &self.model {
            VoxelModel::MeanField(v) => v.clone(),
            VoxelModel::Uniform { center, .. } => center.clone(),
            VoxelModel::Gaussian { mean, .. } => mean.clone(),
            VoxelModel::Gmm { k, components } => components
                .chunks(*k)
                .map(|c| c.iter().map(|g| g.weight * g.mean).sum())
                .collect(),
            VoxelModel::Quantile { .. } => (0..n)
                .map(|v| {
                    let b = self.quantile_slice(v).unwrap();
                    let q = b.len() - 1;
                    b.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>() / q as f64
                })
                .collect(),
            VoxelModel::Samples { m, samples } => samples
                .chunks(*m)
                .map(|s| s.iter().sum::<f64>() / *m as f64)
                .collect(),
        };
        ScalarGrid {
            geometry: self.geometry,
            values,
        }
    }

    /// Quantile representation of one voxel.
    ///
    /// `qval` is required for every model except `Quantile`, whose stored
    /// representation is returned as-is. Gaussian tails (also per GMM
    /// component) are clamped at `GAUSSIAN_TAIL_CLAMP` standard deviations.
    pub fn voxel_pdf(&self, index: [usize; 3], qval: Option<f64>) -> Result<QuantilePdf> {
        let v = self.geometry.check_index(index)?;
        if let VoxelModel::Quantile { qval, .. } = &self.model {
            return QuantilePdf::new(*qval, self.quantile_slice(v).unwrap().to_vec());
        }
        let qval = qval.ok_or_else(|| {
            Error::invalid(format!("a qval is required for {} voxels", self.model.name()))
        })?;
        let q = quantile_count(qval)?;
        let masses = (0..=q).map(|j| (j as f64 * qval).min(1.0));
        let boundaries: Vec<f64> = match &self.model {
            VoxelModel::MeanField(m) => vec![m[v]; q + 1],
            VoxelModel::Uniform { center, width } => {
                let lo = center[v] - 0.5 * width[v];
                masses.map(|p| lo + p * width[v]).collect()
            }
            VoxelModel::Gaussian { mean, sigma } => {
                gaussian_quantiles(mean[v], sigma[v], q)
            }
            VoxelModel::Gmm { k, components } => {
                let comps = &components[v * k..(v + 1) * k];
                masses.map(|p| gmm_quantile(comps, p)).collect()
            }
            VoxelModel::Samples { m, samples } => {
                let mut s = samples[v * m..(v + 1) * m].to_vec();
                s.sort_by(f64::total_cmp);
                empirical_quantiles(&s, q)
            }
            VoxelModel::Quantile { .. } => unreachable!(),
        };
        QuantilePdf::new(qval, boundaries)
    }
}

fn gaussian_quantiles(mu: f64, sigma: f64, q: usize) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![mu; q + 1];
    }
    let lo = mu - GAUSSIAN_TAIL_CLAMP * sigma;
    let hi = mu + GAUSSIAN_TAIL_CLAMP * sigma;
    let normal = Normal::new(mu, sigma).expect("sigma checked positive");
    (0..=q)
        .map(|j| {
            if j == 0 {
                lo
            } else if j == q {
                hi
            } else {
                normal.inverse_cdf(j as f64 / q as f64).clamp(lo, hi)
            }
        })
        .collect()
}

/// Inverse CDF of a mixture by bisection, tails clamped per component.
fn gmm_quantile(comps: &[GmmComponent], p: f64) -> f64 {
    let lo = comps
        .iter()
        .map(|c| c.mean - GAUSSIAN_TAIL_CLAMP * c.sigma)
        .fold(f64::INFINITY, f64::min);
    let hi = comps
        .iter()
        .map(|c| c.mean + GAUSSIAN_TAIL_CLAMP * c.sigma)
        .fold(f64::NEG_INFINITY, f64::max);
    if p <= 0.0 {
        return lo;
    }
    if p >= 1.0 {
        return hi;
    }
    let cdf = |x: f64| -> f64 {
        comps
            .iter()
            .map(|c| {
                let z = if c.sigma > 0.0 {
                    statrs::function::erf::erfc(-(x - c.mean) / (c.sigma * std::f64::consts::SQRT_2))
                        * 0.5
                } else if x >= c.mean {
                    1.0
                } else {
                    0.0
                };
                c.weight * z
            })
            .sum()
    };
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if cdf(mid) < p {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// `M` congruent members.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleVolume {
    pub geometry: GridGeometry,
    members: Vec<Vec<f64>>,
}

impl EnsembleVolume {
    pub fn new(members: Vec<ScalarGrid>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::invalid("ensemble needs at least one member"))?;
        let geometry = first.geometry;
        if let Some(p) = members.iter().position(|m| m.geometry != geometry) {
            return Err(Error::invalid(format!(
                "member {p} is not congruent with member 0"
            )));
        }
        Ok(Self {
            geometry,
            members: members.into_iter().map(|m| m.values).collect(),
        })
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn member(&self, m: usize) -> ScalarGrid {
        ScalarGrid {
            geometry: self.geometry,
            values: self.members[m].clone(),
        }
    }

    pub fn member_values(&self, m: usize) -> &[f64] {
        &self.members[m]
    }

    /// The `M` values at one voxel, in member order.
    pub fn voxel_samples(&self, idx: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.members.iter().map(|m| m[idx]));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_voxel(model: VoxelModel) -> DistributionVolume {
        DistributionVolume::new(GridGeometry::unit([1, 1, 1]), model).unwrap()
    }

    #[test]
    fn linear_index_is_x_fastest() {
        let g = GridGeometry::unit([3, 4, 5]);
        assert_eq!(g.linear([1, 0, 0]), 1);
        assert_eq!(g.linear([0, 1, 0]), 3);
        assert_eq!(g.linear([0, 0, 1]), 12);
        for idx in 0..g.voxel_count() {
            assert_eq!(g.linear(g.unravel(idx)), idx);
        }
    }

    #[test]
    fn quantile_pdf_rejects_bad_qval_and_order() {
        assert!(QuantilePdf::new(0.3, vec![0.0; 5]).is_err());
        assert!(QuantilePdf::new(0.25, vec![0.0, 1.0, 0.5, 2.0, 3.0]).is_err());
        assert!(QuantilePdf::new(0.25, vec![0.0; 4]).is_err());
        let p = QuantilePdf::new(0.125, vec![0.0; 9]).unwrap();
        assert_eq!(p.q(), 8);
    }

    #[test]
    fn cdf_hits_masses_at_boundaries() {
        let p = QuantilePdf::new(0.25, vec![0.0, 0.1, 0.2, 0.6, 1.0]).unwrap();
        for (j, &b) in p.boundaries().iter().enumerate().take(4) {
            assert!((p.cdf(b) - 0.25 * j as f64).abs() < 1e-12);
        }
        assert_eq!(p.cdf(1.0), 1.0);
        assert!((p.cdf(0.4) - 0.625).abs() < 1e-12);
    }

    #[test]
    fn uniform_voxel_quantiles() {
        let vol = one_voxel(VoxelModel::Uniform {
            center: vec![0.5],
            width: vec![1.0],
        });
        let p = vol.voxel_pdf([0, 0, 0], Some(0.25)).unwrap();
        assert_eq!(p.boundaries(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn gaussian_voxel_median_and_clamp() {
        let vol = one_voxel(VoxelModel::Gaussian {
            mean: vec![0.0],
            sigma: vec![1.0],
        });
        let p = vol.voxel_pdf([0, 0, 0], Some(0.5)).unwrap();
        assert_eq!(p.boundaries()[0], -6.0);
        assert!(p.boundaries()[1].abs() < 1e-12);
        assert_eq!(p.boundaries()[2], 6.0);
    }

    #[test]
    fn samples_voxel_uses_inclusive_quantiles() {
        let vol = one_voxel(VoxelModel::Samples {
            m: 4,
            samples: vec![4.0, 2.0, 1.0, 3.0],
        });
        let p = vol.voxel_pdf([0, 0, 0], Some(0.25)).unwrap();
        assert_eq!(p.boundaries(), &[1.0, 1.75, 2.5, 3.25, 4.0]);
    }

    #[test]
    fn zero_variance_models_give_equal_boundaries() {
        for model in [
            VoxelModel::Gaussian {
                mean: vec![0.3],
                sigma: vec![0.0],
            },
            VoxelModel::Uniform {
                center: vec![0.3],
                width: vec![0.0],
            },
            VoxelModel::MeanField(vec![0.3]),
        ] {
            let p = one_voxel(model).voxel_pdf([0, 0, 0], Some(0.125)).unwrap();
            assert!(p.boundaries().iter().all(|&b| b == 0.3));
        }
    }

    #[test]
    fn gmm_voxel_quantiles_match_single_gaussian() {
        let vol = one_voxel(VoxelModel::Gmm {
            k: 2,
            components: vec![
                GmmComponent::new(0.5, 1.0, 0.2),
                GmmComponent::new(0.5, 1.0, 0.2),
            ],
        });
        let p = vol.voxel_pdf([0, 0, 0], Some(0.25)).unwrap();
        let normal = Normal::new(1.0, 0.2).unwrap();
        for j in 1..4 {
            let want = normal.inverse_cdf(j as f64 * 0.25);
            assert!((p.boundaries()[j] - want).abs() < 1e-9);
        }
    }

    #[test]
    fn out_of_bounds_index() {
        let vol = one_voxel(VoxelModel::MeanField(vec![1.0]));
        assert!(matches!(
            vol.voxel_pdf([1, 0, 0], Some(0.5)),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn volume_validation() {
        let g = GridGeometry::unit([2, 1, 1]);
        assert!(DistributionVolume::new(
            g,
            VoxelModel::Gaussian {
                mean: vec![0.0, 0.0],
                sigma: vec![1.0, -1.0]
            }
        )
        .is_err());
        assert!(DistributionVolume::new(
            g,
            VoxelModel::Quantile {
                qval: 0.5,
                boundaries: vec![0.0, 1.0, 2.0, 0.0, 2.0, 1.0]
            }
        )
        .is_err());
        assert!(DistributionVolume::new(g, VoxelModel::MeanField(vec![0.0])).is_err());
    }

    #[test]
    fn ensemble_requires_congruent_members() {
        let a = ScalarGrid::new(GridGeometry::unit([2, 2, 2]), vec![0.0; 8]).unwrap();
        let b = ScalarGrid::new(GridGeometry::unit([2, 2, 1]), vec![0.0; 4]).unwrap();
        assert!(EnsembleVolume::new(vec![a.clone(), b]).is_err());
        assert!(EnsembleVolume::new(vec![]).is_err());
        assert_eq!(EnsembleVolume::new(vec![a.clone(), a]).unwrap().member_count(), 2);
    }
}
