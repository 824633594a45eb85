//! Additive noise models and ensemble generation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::volume::{EnsembleVolume, ScalarGrid};
use crate::{Error, Result};

pub const DEFAULT_P_MAIN: f64 = 0.8;
pub const DEFAULT_MAIN_SIGMA: f64 = 0.04;
pub const DEFAULT_OUTLIER_OFFSET: f64 = 0.4;
pub const DEFAULT_OUTLIER_SIGMA: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    Gaussian { sigma: f64 },
    /// Zero-centered, total width `width`.
    Uniform { width: f64 },
    /// `N(0, main_sigma^2)` with probability `p_main`, otherwise
    /// `N(offset, outlier_sigma^2)`.
    Bimodal {
        p_main: f64,
        main_sigma: f64,
        offset: f64,
        outlier_sigma: f64,
    },
}

impl NoiseKind {
    pub fn bimodal() -> Self {
        NoiseKind::Bimodal {
            p_main: DEFAULT_P_MAIN,
            main_sigma: DEFAULT_MAIN_SIGMA,
            offset: DEFAULT_OUTLIER_OFFSET,
            outlier_sigma: DEFAULT_OUTLIER_SIGMA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            NoiseKind::Gaussian { sigma } => sigma >= 0.0 && sigma.is_finite(),
            NoiseKind::Uniform { width } => width >= 0.0 && width.is_finite(),
            NoiseKind::Bimodal {
                p_main,
                main_sigma,
                offset,
                outlier_sigma,
            } => {
                (0.0..=1.0).contains(&p_main)
                    && main_sigma >= 0.0
                    && outlier_sigma >= 0.0
                    && main_sigma.is_finite()
                    && outlier_sigma.is_finite()
                    && offset.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid noise parameters {self}")))
        }
    }

    /// Analytic mean of one draw.
    pub fn mean(&self) -> f64 {
        match *self {
            NoiseKind::Gaussian { .. } | NoiseKind::Uniform { .. } => 0.0,
            NoiseKind::Bimodal { p_main, offset, .. } => (1.0 - p_main) * offset,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseKind::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
            NoiseKind::Uniform { width } => width * (rng.random::<f64>() - 0.5),
            NoiseKind::Bimodal {
                p_main,
                main_sigma,
                offset,
                outlier_sigma,
            } => {
                let main = rng.random::<f64>() < p_main;
                let z: f64 = StandardNormal.sample(rng);
                if main {
                    main_sigma * z
                } else {
                    offset + outlier_sigma * z
                }
            }
        }
    }
}

/// `gaussian:sigma`, `uniform:width`, `bimodal` or
/// `bimodal:p_main,main_sigma,offset,outlier_sigma`.
impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (s.trim(), None),
        };
        let nums = |a: &str| -> Result<Vec<f64>> {
            a.split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::invalid(format!("bad noise parameters {a:?}: {e}")))
        };
        let kind = match (name, args) {
            ("gaussian", Some(a)) => match nums(a)?[..] {
                [sigma] => NoiseKind::Gaussian { sigma },
                _ => return Err(Error::invalid("gaussian noise takes one parameter: gaussian:sigma")),
            },
            ("uniform", Some(a)) => match nums(a)?[..] {
                [width] => NoiseKind::Uniform { width },
                _ => return Err(Error::invalid("uniform noise takes one parameter: uniform:width")),
            },
            ("bimodal", None) => NoiseKind::bimodal(),
            ("bimodal", Some(a)) => match nums(a)?[..] {
                [p_main, main_sigma, offset, outlier_sigma] => NoiseKind::Bimodal {
                    p_main,
                    main_sigma,
                    offset,
                    outlier_sigma,
                },
                _ => {
                    return Err(Error::invalid(
                        "bimodal noise takes four parameters: bimodal:p_main,main_sigma,offset,outlier_sigma",
                    ))
                }
            },
            _ => return Err(Error::invalid(format!("unknown noise {s:?}"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseKind::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
            NoiseKind::Uniform { width } => write!(f, "uniform:{width}"),
            NoiseKind::Bimodal {
                p_main,
                main_sigma,
                offset,
                outlier_sigma,
            } => write!(f, "bimodal:{p_main},{main_sigma},{offset},{outlier_sigma}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub seed: u64,
    pub members: usize,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, seed: u64, members: usize) -> Result<Self> {
        kind.validate()?;
        if members == 0 {
            return Err(Error::invalid("an ensemble needs at least one member"));
        }
        Ok(Self { kind, seed, members })
    }

    /// The draw for member `m` at voxel `v`, independent of evaluation order.
    pub fn draw_at(&self, m: usize, v: usize) -> f64 {
        let mut rng = crate::rng::stream(self.seed, &[m as u64, v as u64]);
        self.kind.draw(&mut rng)
    }
}

/// Adds independent noise to every voxel of every member. Values are not
/// clamped.
pub fn make_ensemble(gt: &ScalarGrid, noise: &NoiseSpec) -> Result<EnsembleVolume> {
    noise.kind.validate()?;
    if noise.members == 0 {
        return Err(Error::invalid("an ensemble needs at least one member"));
    }
    let members = (0..noise.members)
        .map(|m| {
            let values = gt
                .values
                .par_iter()
                .enumerate()
                .map(|(v, &x)| x + noise.draw_at(m, v))
                .collect();
            ScalarGrid {
                geometry: gt.geometry,
                values,
            }
        })
        .collect();
    EnsembleVolume::new(members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::GridGeometry;

    fn grid() -> ScalarGrid {
        let g = GridGeometry::unit([4, 3, 2]);
        ScalarGrid::from_fn(g, |[i, j, k]| (i + j + k) as f64 / 10.0)
    }

    #[test]
    fn zero_noise_copies_ground_truth() {
        let spec = NoiseSpec::new(NoiseKind::Gaussian { sigma: 0.0 }, 1, 5).unwrap();
        let e = make_ensemble(&grid(), &spec).unwrap();
        for m in 0..5 {
            assert_eq!(e.member_values(m), grid().values.as_slice());
        }
    }

    #[test]
    fn same_spec_same_ensemble() {
        let spec = NoiseSpec::new(NoiseKind::bimodal(), 42, 3).unwrap();
        assert_eq!(make_ensemble(&grid(), &spec).unwrap(), make_ensemble(&grid(), &spec).unwrap());
        let other = NoiseSpec { seed: 43, ..spec };
        assert_ne!(make_ensemble(&grid(), &spec).unwrap(), make_ensemble(&grid(), &other).unwrap());
    }

    #[test]
    fn bimodal_mean_at_one_voxel() {
        let spec = NoiseSpec::new(NoiseKind::bimodal(), 7, 1_000_000).unwrap();
        let n = spec.members as f64;
        let draws: Vec<f64> = (0..spec.members).map(|m| spec.draw_at(m, 0)).collect();
        let mean = draws.iter().sum::<f64>() / n;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let want = 0.8 * 0.0 + 0.2 * DEFAULT_OUTLIER_OFFSET;
        assert!((mean - want).abs() < 3.0 * (var / n).sqrt(), "{mean} vs {want}");
    }

    #[test]
    fn draws_are_uncorrelated_across_voxels() {
        let spec = NoiseSpec::new(NoiseKind::Gaussian { sigma: 1.0 }, 3, 10_000).unwrap();
        let a: Vec<f64> = (0..10_000).map(|m| spec.draw_at(m, 5)).collect();
        let b: Vec<f64> = (0..10_000).map(|m| spec.draw_at(m, 6)).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (ma, mb) = (mean(&a), mean(&b));
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        assert!((cov / (va * vb).sqrt()).abs() < 0.02);
    }

    #[test]
    fn ensemble_mean_converges() {
        let gt = grid();
        let kind = NoiseKind::bimodal();
        let mut errs = Vec::new();
        for m in [5, 50, 500] {
            let e = make_ensemble(&gt, &NoiseSpec::new(kind, 11, m).unwrap()).unwrap();
            let err: f64 = (0..gt.values.len())
                .map(|v| {
                    let avg = (0..m).map(|k| e.member_values(k)[v]).sum::<f64>() / m as f64;
                    (avg - gt.values[v] - kind.mean()).abs()
                })
                .sum::<f64>()
                / gt.values.len() as f64;
            errs.push(err);
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn parse_noise() {
        assert_eq!("gaussian:0.1".parse::<NoiseKind>().unwrap(), NoiseKind::Gaussian { sigma: 0.1 });
        assert_eq!("bimodal".parse::<NoiseKind>().unwrap(), NoiseKind::bimodal());
        let b = NoiseKind::bimodal();
        assert_eq!(b.to_string().parse::<NoiseKind>().unwrap(), b);
        assert!("bimodal:1.5,0.1,0.4,0.02".parse::<NoiseKind>().is_err());
        assert!("gaussian:-1".parse::<NoiseKind>().is_err());
        assert!("pink".parse::<NoiseKind>().is_err());
    }
}
