//! Synthetic ground truth: analytic fields, noisy ensembles and a coupled
//! bivariate pair.

mod fields;
mod io;
mod noise;

pub use fields::{normalize, sample_field, Field, SHELL_HALF_WIDTH, SHELL_RADII, SHELL_VALUES};
pub use io::{read_ensemble, write_ensemble, EnsembleManifest, MANIFEST_NAME};
pub use noise::{
    make_ensemble, NoiseKind, NoiseSpec, DEFAULT_MAIN_SIGMA, DEFAULT_OUTLIER_OFFSET, DEFAULT_OUTLIER_SIGMA,
    DEFAULT_P_MAIN,
};

use crate::volume::{GridGeometry, ScalarGrid};
use crate::{Error, Result};

/// Center of the well in [`make_bivariate`].
pub const WELL_CENTER: [f64; 3] = [0.1, -0.05, 0.0];

/// Two smooth coupled fields on `[-1, 1]^3`, each normalized to `[0, 1]`:
///
/// * `f1 = 1 - exp(-|p - c|^2 / 0.5)`, a radial well around [`WELL_CENTER`];
/// * `f2 = f1^2 + 0.3 z + 0.2 x y`, a warped companion.
pub fn make_bivariate(dims: [usize; 3]) -> Result<(ScalarGrid, ScalarGrid)> {
    if dims.iter().any(|&d| d < 2) {
        return Err(Error::invalid(format!("fields need at least 2 samples per axis, got {dims:?}")));
    }
    let spacing = std::array::from_fn(|a| 2.0 / (dims[a] - 1) as f64);
    let geometry = GridGeometry::new(dims, spacing, [-1.0; 3])?;
    let well = |[x, y, z]: [f64; 3]| {
        let [cx, cy, cz] = WELL_CENTER;
        let r2 = (x - cx).powi(2) + (y - cy).powi(2) + (z - cz).powi(2);
        1.0 - (-r2 / 0.5).exp()
    };
    let mut f1 = ScalarGrid::from_fn(geometry, |i| well(geometry.world_position(i)));
    let mut f2 = ScalarGrid::from_fn(geometry, |i| {
        let p = geometry.world_position(i);
        well(p).powi(2) + 0.3 * p[2] + 0.2 * p[0] * p[1]
    });
    normalize(&mut f1);
    normalize(&mut f2);
    Ok((f1, f2))
}
