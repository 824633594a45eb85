//! Closed-form test fields.

use std::fmt;
use std::str::FromStr;

use crate::volume::{GridGeometry, ScalarGrid};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Field {
    /// `x^4 - 5x^2 + y^4 - 5y^2 + z^4 - 5z^2 + 11.8`.
    Tangle,
    /// `0.5x^5 + 0.5x^4 - y^2 - z^2`.
    Teardrop,
    /// Four concentric shells of increasing intensity on a zero background.
    NestedSpheres,
    Linear([f64; 3]),
    Constant(f64),
}

/// Shell radii, half-thickness and intensities of [`Field::NestedSpheres`].
pub const SHELL_RADII: [f64; 4] = [0.2, 0.45, 0.7, 0.95];
pub const SHELL_HALF_WIDTH: f64 = 0.04;
pub const SHELL_VALUES: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

impl Field {
    pub fn eval(&self, [x, y, z]: [f64; 3]) -> f64 {
        match *self {
            Field::Tangle => {
                let g = |t: f64| t.powi(4) - 5.0 * t * t;
                // summed in sorted order so the value is exactly symmetric
                let mut terms = [g(x), g(y), g(z)];
                terms.sort_by(f64::total_cmp);
                terms[0] + terms[1] + terms[2] + 11.8
            }
            Field::Teardrop => 0.5 * x.powi(5) + 0.5 * x.powi(4) - y * y - z * z,
            Field::NestedSpheres => {
                let r = (x * x + y * y + z * z).sqrt();
                SHELL_RADII
                    .iter()
                    .zip(SHELL_VALUES)
                    .find(|(&c, _)| (r - c).abs() <= SHELL_HALF_WIDTH)
                    .map_or(0.0, |(_, v)| v)
            }
            Field::Linear([a, b, c]) => a * x + b * y + c * z,
            Field::Constant(c) => c,
        }
    }

    /// Sampling box used when none is given.
    pub fn default_domain(&self) -> ([f64; 3], [f64; 3]) {
        match self {
            Field::Tangle => ([-2.5; 3], [2.5; 3]),
            Field::Teardrop => ([-1.1, -0.35, -0.35], [0.1, 0.35, 0.35]),
            Field::NestedSpheres | Field::Linear(_) | Field::Constant(_) => ([-1.0; 3], [1.0; 3]),
        }
    }
}

fn parse_numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::invalid(format!("bad field parameters {s:?}: {e}")))
}

/// `tangle`, `teardrop`, `nested-spheres`, `linear:a,b,c`, `constant:c`.
impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (s.trim(), None),
        };
        let field = match (name, args) {
            ("tangle", None) => Field::Tangle,
            ("teardrop", None) => Field::Teardrop,
            ("nested-spheres", None) => Field::NestedSpheres,
            ("linear", Some(a)) => match parse_numbers(a)?[..] {
                [a, b, c] => Field::Linear([a, b, c]),
                _ => return Err(Error::invalid("linear field needs three coefficients: linear:a,b,c")),
            },
            ("constant", Some(a)) => match parse_numbers(a)?[..] {
                [c] => Field::Constant(c),
                _ => return Err(Error::invalid("constant field needs one value: constant:c")),
            },
            _ => {
                return Err(Error::invalid(format!(
                    "unknown field {s:?}; expected tangle, teardrop, nested-spheres, linear:a,b,c or constant:c"
                )))
            }
        };
        Ok(field)
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Tangle => write!(f, "tangle"),
            Field::Teardrop => write!(f, "teardrop"),
            Field::NestedSpheres => write!(f, "nested-spheres"),
            Field::Linear([a, b, c]) => write!(f, "linear:{a},{b},{c}"),
            Field::Constant(c) => write!(f, "constant:{c}"),
        }
    }
}

/// Rescales to `[0, 1]`; constant grids are returned unchanged.
pub fn normalize(grid: &mut ScalarGrid) {
    let (lo, hi) = grid.range();
    if hi > lo {
        let span = hi - lo;
        grid.values.iter_mut().for_each(|v| *v = (*v - lo) / span);
    }
}

/// Samples `field` on a `dims` lattice spanning `domain` (corners included)
/// and normalizes the result.
pub fn sample_field(field: &Field, dims: [usize; 3], domain: Option<([f64; 3], [f64; 3])>) -> Result<ScalarGrid> {
    if dims.iter().any(|&d| d < 2) {
        return Err(Error::invalid(format!("fields need at least 2 samples per axis, got {dims:?}")));
    }
    let (lo, hi) = domain.unwrap_or_else(|| field.default_domain());
    let spacing = std::array::from_fn(|a| (hi[a] - lo[a]) / (dims[a] - 1) as f64);
    let geometry = GridGeometry::new(dims, spacing, lo)?;
    let mut grid = ScalarGrid::from_fn(geometry, |idx| field.eval(geometry.world_position(idx)));
    normalize(&mut grid);
    Ok(grid)
}
