//! Gradient of the interpolated field as a linear combination of voxels.
//!
//! The reconstruction filter is trilinear interpolation of per-voxel central
//! differences, so both the interpolated value and the derivative along any
//! fixed direction are linear in the voxel values.

use crate::interp::TrilinearCoords;
use crate::volume::{GridGeometry, ScalarGrid};
use crate::{Error, Result};

/// Neighbor weights of one sample point.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientStencil {
    /// Linear voxel indices, at most 32.
    pub neighbors: Vec<usize>,
    /// Interpolation weights; they sum to one.
    pub w: Vec<f64>,
    /// Per-axis derivative weights; each axis sums to zero.
    pub axis: Vec<[f64; 3]>,
    /// Directional-derivative weights along the mean gradient.
    pub u: Vec<f64>,
    pub mean_gradient: [f64; 3],
    /// Mean gradient is zero: `u` is all zeros.
    pub degenerate: bool,
}

impl GradientStencil {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Interpolated value and directional derivative of a realization.
    pub fn apply(&self, values: &[f64]) -> (f64, f64) {
        let x = self.w.iter().zip(values).map(|(w, v)| w * v).sum();
        let y = self.u.iter().zip(values).map(|(u, v)| u * v).sum();
        (x, y)
    }
}

/// True when every central-difference neighbor of the cell exists.
pub fn has_gradient_support(geometry: &GridGeometry, coords: &TrilinearCoords) -> bool {
    (0..3).all(|a| coords.base[a] >= 1 && coords.base[a] + 2 < geometry.dims[a])
}

pub fn gradient_stencil(
    geometry: &GridGeometry,
    coords: &TrilinearCoords,
    mean: &ScalarGrid,
) -> Result<GradientStencil> {
    if !has_gradient_support(geometry, coords) {
        return Err(Error::invalid(format!(
            "cell {:?} is too close to the boundary of {:?} for central differences",
            coords.base, geometry.dims
        )));
    }
    if mean.geometry.dims != geometry.dims {
        return Err(Error::invalid("mean grid does not match the volume"));
    }
    let tw = coords.weights();
    let corners = coords.corner_indices(geometry);
    let stride = [1, geometry.dims[0], geometry.dims[0] * geometry.dims[1]];

    let mut neighbors: Vec<usize> = Vec::with_capacity(32);
    let mut w: Vec<f64> = Vec::with_capacity(32);
    let mut axis: Vec<[f64; 3]> = Vec::with_capacity(32);
    let slot = |idx: usize, neighbors: &mut Vec<usize>, w: &mut Vec<f64>, axis: &mut Vec<[f64; 3]>| {
        match neighbors.iter().position(|&n| n == idx) {
            Some(p) => p,
            None => {
                neighbors.push(idx);
                w.push(0.0);
                axis.push([0.0; 3]);
                neighbors.len() - 1
            }
        }
    };
    for (c, &p) in corners.iter().enumerate() {
        let s = slot(p, &mut neighbors, &mut w, &mut axis);
        w[s] += tw[c];
    }
    for (c, &p) in corners.iter().enumerate() {
        for a in 0..3 {
            let k = tw[c] / (2.0 * geometry.spacing[a]);
            let s = slot(p + stride[a], &mut neighbors, &mut w, &mut axis);
            axis[s][a] += k;
            let s = slot(p - stride[a], &mut neighbors, &mut w, &mut axis);
            axis[s][a] -= k;
        }
    }

    let mut g = [0.0; 3];
    let mut scale = 0.0;
    for (i, &n) in neighbors.iter().enumerate() {
        let v = mean.values[n];
        for a in 0..3 {
            g[a] += axis[i][a] * v;
            scale += (axis[i][a] * v).abs();
        }
    }
    let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
    let degenerate = !(norm > 1e-12 * scale);
    let u = if degenerate {
        vec![0.0; neighbors.len()]
    } else {
        axis.iter()
            .map(|d| (g[0] * d[0] + g[1] * d[1] + g[2] * d[2]) / norm)
            .collect()
    };
    Ok(GradientStencil {
        neighbors,
        w,
        axis,
        u,
        mean_gradient: g,
        degenerate,
    })
}
