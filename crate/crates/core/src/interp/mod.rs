//! Distribution interpolation at arbitrary points inside the grid.

pub mod oracle;
pub mod parametric;
pub mod quantile;

pub use oracle::{ks_distance, ks_distance_samples, mc_oracle_interp, Coupling, EmpiricalCdf};
pub use parametric::{interp_gaussian, interp_gmm_ordered, interp_uniform, sample_gmm_mc, LatticeDensity};
pub use quantile::{quantile_interp_1d, quantile_interp_3d, quantile_interp_3d_rational};

use crate::volume::GridGeometry;

/// Cell and local parameters of a point inside the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrilinearCoords {
    pub base: [usize; 3],
    /// `(alpha, beta, gamma)`, each in `[0, 1]`.
    pub t: [f64; 3],
}

impl TrilinearCoords {
    /// Locates a world-space point. Returns `None` outside the voxel-center
    /// bounding box or when an axis has fewer than two voxels.
    pub fn locate(geometry: &GridGeometry, p: [f64; 3]) -> Option<Self> {
        let mut base = [0; 3];
        let mut t = [0.0; 3];
        for a in 0..3 {
            let n = geometry.dims[a];
            if n < 2 {
                return None;
            }
            let u = (p[a] - geometry.origin[a]) / geometry.spacing[a];
            let last = (n - 1) as f64;
            // tolerate round-off at the faces
            if !(u >= -1e-9 && u <= last + 1e-9) {
                return None;
            }
            let u = u.clamp(0.0, last);
            let b = (u.floor() as usize).min(n - 2);
            base[a] = b;
            t[a] = (u - b as f64).clamp(0.0, 1.0);
        }
        Some(Self { base, t })
    }

    /// Linear indices of the eight corners, bit 0 of the position along +x,
    /// bit 1 along +y, bit 2 along +z.
    pub fn corner_indices(&self, geometry: &GridGeometry) -> [usize; 8] {
        let root = geometry.linear(self.base);
        let dx = 1;
        let dy = geometry.dims[0];
        let dz = geometry.dims[0] * geometry.dims[1];
        std::array::from_fn(|i| root + (i & 1) * dx + ((i >> 1) & 1) * dy + ((i >> 2) & 1) * dz)
    }

    pub fn weights(&self) -> [f64; 8] {
        trilinear_weights(self.t)
    }
}

/// Trilinear weights in corner order; they sum to one.
pub fn trilinear_weights([a, b, g]: [f64; 3]) -> [f64; 8] {
    std::array::from_fn(|i| {
        let wx = if i & 1 == 1 { a } else { 1.0 - a };
        let wy = if (i >> 1) & 1 == 1 { b } else { 1.0 - b };
        let wz = if (i >> 2) & 1 == 1 { g } else { 1.0 - g };
        wx * wy * wz
    })
}
