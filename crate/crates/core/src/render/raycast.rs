//! Front-to-back raycasting with per-sample statistical classification.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rayon::prelude::*;

use crate::classify::gradient::{gradient_stencil, has_gradient_support};
use crate::classify::joint::{expected_color_2d, expected_color_linear, DEFAULT_JOINT_POINTS};
use crate::classify::schemes::{expected_color_gaussian, expected_color_gmm, expected_color_lattice, quantile_mean_color, quantile_range_color};
use crate::classify::{Rgba, TransferFunction1D, TransferFunction2D};
use crate::density::gmm::GmmComponent;
use crate::interp::parametric::draw_gmm_sum;
use crate::interp::quantile::blend_boundaries;
use crate::interp::{interp_gaussian, interp_gmm_ordered, interp_uniform, TrilinearCoords};
use crate::render::camera::{Camera, Vec3};
use crate::render::image::Image;
use crate::rng::{derive_seed, mix64};
use crate::volume::{DistributionVolume, ScalarGrid, VoxelModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Mean,
    Uniform,
    Gaussian,
    GmmOrdered,
    GmmMc,
    QuantileRange,
    QuantileMean,
    /// Intensity and directional derivative against a 2D TF.
    Tf2d,
    /// Two congruent volumes against a 2D TF over their value pair.
    Bivariate,
}

impl Scheme {
    pub const ALL: [Scheme; 9] = [
        Scheme::Mean,
        Scheme::Uniform,
        Scheme::Gaussian,
        Scheme::GmmOrdered,
        Scheme::GmmMc,
        Scheme::QuantileRange,
        Scheme::QuantileMean,
        Scheme::Tf2d,
        Scheme::Bivariate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Mean => "mean",
            Scheme::Uniform => "uniform",
            Scheme::Gaussian => "gaussian",
            Scheme::GmmOrdered => "gmm-ordered",
            Scheme::GmmMc => "gmm-mc",
            Scheme::QuantileRange => "quantile-range",
            Scheme::QuantileMean => "quantile-mean",
            Scheme::Tf2d => "tf2d",
            Scheme::Bivariate => "bivariate",
        }
    }

    pub fn uses_tf2d(self) -> bool {
        matches!(self, Scheme::Tf2d | Scheme::Bivariate)
    }

    pub fn accepts(self, model: &VoxelModel) -> bool {
        match self {
            Scheme::Mean => true,
            Scheme::Uniform | Scheme::Tf2d => matches!(model, VoxelModel::Uniform { .. }),
            Scheme::Gaussian => matches!(model, VoxelModel::Gaussian { .. }),
            Scheme::GmmOrdered | Scheme::GmmMc => matches!(model, VoxelModel::Gmm { .. }),
            Scheme::QuantileRange | Scheme::QuantileMean => matches!(model, VoxelModel::Quantile { .. }),
            Scheme::Bivariate => matches!(model, VoxelModel::MeanField(_) | VoxelModel::Uniform { .. }),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Scheme::ALL.iter().map(|k| k.name()).collect();
                Error::invalid(format!("unknown scheme {s:?}, expected one of {}", names.join(", ")))
            })
    }
}

/// Per-sample integration budgets of the approximate schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Lattice cells for the uniform convolution.
    pub lattice: usize,
    /// Realizations per sample for `gmm-mc`.
    pub mc_samples: usize,
    /// Low-discrepancy points per sample for the 2D TF schemes.
    pub joint_points: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            lattice: 128,
            mc_samples: 64,
            joint_points: DEFAULT_JOINT_POINTS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RenderJob<'a> {
    pub volume: &'a DistributionVolume,
    /// Second field of the bivariate scheme.
    pub secondary: Option<&'a DistributionVolume>,
    pub scheme: Scheme,
    pub tf: Option<TransferFunction1D>,
    pub tf2d: Option<TransferFunction2D>,
    pub camera: Camera,
    /// Sample distance as a fraction of the smallest voxel spacing.
    pub step: f64,
    pub termination: f64,
    pub background: Rgba,
    pub seed: u64,
    /// Restricts the quantile-range scheme to these pieces.
    pub pieces: Option<Range<usize>>,
    pub options: RenderOptions,
}

impl<'a> RenderJob<'a> {
    pub fn new(volume: &'a DistributionVolume, scheme: Scheme, camera: Camera) -> Self {
        Self {
            volume,
            secondary: None,
            scheme,
            tf: None,
            tf2d: None,
            camera,
            step: 0.5,
            termination: 0.99,
            background: Rgba::new(0.0, 0.0, 0.0, 1.0),
            seed: 0,
            pieces: None,
            options: RenderOptions::default(),
        }
    }

    pub fn with_tf(mut self, tf: TransferFunction1D) -> Self {
        self.tf = Some(tf);
        self
    }

    pub fn with_tf2d(mut self, tf: TransferFunction2D) -> Self {
        self.tf2d = Some(tf);
        self
    }

    pub fn with_background(mut self, bg: Rgba) -> Self {
        self.background = bg;
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_secondary(mut self, v: &'a DistributionVolume) -> Self {
        self.secondary = Some(v);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::invalid(format!("step must be positive, got {}", self.step)));
        }
        if !(self.termination > 0.0 && self.termination <= 1.0) {
            return Err(Error::invalid(format!("termination {} outside (0, 1]", self.termination)));
        }
        self.camera.validate()?;
        if !self.scheme.accepts(self.volume.model()) {
            return Err(Error::SchemeMismatch {
                scheme: self.scheme.name().into(),
                model: self.volume.model().name().into(),
            });
        }
        if self.scheme.uses_tf2d() {
            if self.tf2d.is_none() {
                return Err(Error::invalid(format!("scheme {} needs a 2D transfer function", self.scheme)));
            }
        } else if self.tf.is_none() {
            return Err(Error::invalid(format!("scheme {} needs a 1D transfer function", self.scheme)));
        }
        if self.scheme == Scheme::Bivariate {
            let s = self
                .secondary
                .ok_or_else(|| Error::invalid("bivariate scheme needs a secondary volume"))?;
            if s.geometry != self.volume.geometry {
                return Err(Error::invalid("secondary volume geometry differs from the primary"));
            }
            if !self.scheme.accepts(s.model()) {
                return Err(Error::SchemeMismatch {
                    scheme: self.scheme.name().into(),
                    model: s.model().name().into(),
                });
            }
        }
        if let Some(p) = &self.pieces {
            let VoxelModel::Quantile { qval, .. } = self.volume.model() else {
                return Err(Error::invalid("piece ranges need a quantile volume"));
            };
            let q = (1.0 / qval).round() as usize;
            if self.scheme != Scheme::QuantileRange || p.is_empty() || p.end > q {
                return Err(Error::invalid(format!("piece range {p:?} invalid for q = {q}")));
            }
        }
        Ok(())
    }
}

fn uniform_pairs(model: &VoxelModel, mean: &ScalarGrid) -> (Vec<f64>, Vec<f64>) {
    match model {
        VoxelModel::Uniform { center, width } => (center.clone(), width.clone()),
        _ => (mean.values.clone(), vec![0.0; mean.values.len()]),
    }
}

/// Scheme state shared by all rays.
enum Classifier<'a> {
    Mean {
        values: Vec<f64>,
        tf: &'a TransferFunction1D,
    },
    Uniform {
        center: &'a [f64],
        width: &'a [f64],
        lattice: usize,
        tf: &'a TransferFunction1D,
    },
    Gaussian {
        mean: &'a [f64],
        sigma: &'a [f64],
        tf: &'a TransferFunction1D,
    },
    Gmm {
        k: usize,
        components: &'a [GmmComponent],
        mc: Option<usize>,
        tf: &'a TransferFunction1D,
    },
    Quantile {
        qval: f64,
        boundaries: &'a [f64],
        range: bool,
        pieces: Range<usize>,
        tf: &'a TransferFunction1D,
    },
    Tf2d {
        center: &'a [f64],
        width: &'a [f64],
        mean: ScalarGrid,
        points: usize,
        tf: &'a TransferFunction2D,
    },
    Bivariate {
        x: (Vec<f64>, Vec<f64>),
        y: (Vec<f64>, Vec<f64>),
        points: usize,
        tf: &'a TransferFunction2D,
    },
}

#[derive(Default)]
struct Scratch {
    boundaries: Vec<f64>,
    corners: Vec<(f64, f64)>,
}

impl<'a> Classifier<'a> {
    fn new(job: &'a RenderJob<'a>) -> Self {
        let vol = job.volume;
        let tf = job.tf.as_ref();
        let tf2d = job.tf2d.as_ref();
        let opts = job.options;
        match (job.scheme, vol.model()) {
            (Scheme::Uniform, VoxelModel::Uniform { center, width }) => Classifier::Uniform {
                center,
                width,
                lattice: opts.lattice,
                tf: tf.unwrap(),
            },
            (Scheme::Gaussian, VoxelModel::Gaussian { mean, sigma }) => Classifier::Gaussian {
                mean,
                sigma,
                tf: tf.unwrap(),
            },
            (Scheme::GmmOrdered | Scheme::GmmMc, VoxelModel::Gmm { k, components }) => Classifier::Gmm {
                k: *k,
                components,
                mc: (job.scheme == Scheme::GmmMc).then_some(opts.mc_samples.max(1)),
                tf: tf.unwrap(),
            },
            (Scheme::QuantileRange | Scheme::QuantileMean, VoxelModel::Quantile { qval, boundaries }) => {
                let q = (1.0 / qval).round() as usize;
                Classifier::Quantile {
                    qval: *qval,
                    boundaries,
                    range: job.scheme == Scheme::QuantileRange,
                    pieces: job.pieces.clone().unwrap_or(0..q),
                    tf: tf.unwrap(),
                }
            }
            (Scheme::Tf2d, VoxelModel::Uniform { center, width }) => Classifier::Tf2d {
                center,
                width,
                mean: vol.mean_grid(),
                points: opts.joint_points,
                tf: tf2d.unwrap(),
            },
            (Scheme::Bivariate, m) => {
                let sec = job.secondary.unwrap();
                Classifier::Bivariate {
                    x: uniform_pairs(m, &vol.mean_grid()),
                    y: uniform_pairs(sec.model(), &sec.mean_grid()),
                    points: opts.joint_points,
                    tf: tf2d.unwrap(),
                }
            }
            _ => Classifier::Mean {
                values: vol.mean_grid().values,
                tf: tf.unwrap(),
            },
        }
    }

    /// Expected color at one sample; `None` skips the sample.
    fn classify(
        &self,
        geometry: &crate::volume::GridGeometry,
        coords: &TrilinearCoords,
        seed: u64,
        scratch: &mut Scratch,
    ) -> Result<Option<Rgba>> {
        let idx = coords.corner_indices(geometry);
        let w = coords.weights();
        let color = match self {
            Classifier::Mean { values, tf } => {
                let x: f64 = (0..8).map(|i| w[i] * values[idx[i]]).sum();
                tf.eval(x)
            }
            Classifier::Uniform {
                center,
                width,
                lattice,
                tf,
            } => {
                scratch.corners.clear();
                scratch.corners.extend(idx.iter().map(|&v| (center[v], width[v])));
                let d = interp_uniform(&scratch.corners, &w, *lattice)?;
                expected_color_lattice(&d, tf)
            }
            Classifier::Gaussian { mean, sigma, tf } => {
                scratch.corners.clear();
                scratch.corners.extend(idx.iter().map(|&v| (mean[v], sigma[v])));
                let (mu, s) = interp_gaussian(&scratch.corners, &w);
                expected_color_gaussian(mu, s, tf)
            }
            Classifier::Gmm { k, components, mc, tf } => {
                let corners: [&[GmmComponent]; 8] = std::array::from_fn(|i| &components[idx[i] * k..(idx[i] + 1) * k]);
                match mc {
                    None => expected_color_gmm(&interp_gmm_ordered(&corners, &w)?.components, tf),
                    Some(n) => {
                        let mut rng = crate::rng::stream(seed, &[]);
                        let mut acc = Rgba::TRANSPARENT;
                        for _ in 0..*n {
                            acc += tf.eval(draw_gmm_sum(&corners, &w, &mut rng));
                        }
                        acc * (1.0 / *n as f64)
                    }
                }
            }
            Classifier::Quantile {
                qval,
                boundaries,
                range,
                pieces,
                tf,
            } => {
                let q = (1.0 / qval).round() as usize;
                let stride = q + 1;
                let slices: [&[f64]; 8] = std::array::from_fn(|i| &boundaries[idx[i] * stride..(idx[i] + 1) * stride]);
                scratch.boundaries.resize(stride, 0.0);
                blend_boundaries(&slices, coords.t, &mut scratch.boundaries);
                if *range {
                    quantile_range_color(&scratch.boundaries, pieces.clone(), tf)
                } else {
                    quantile_mean_color(*qval, &scratch.boundaries, tf)
                }
            }
            Classifier::Tf2d {
                center,
                width,
                mean,
                points,
                tf,
            } => {
                if !has_gradient_support(geometry, coords) {
                    return Ok(None);
                }
                let stencil = gradient_stencil(geometry, coords, mean)?;
                scratch.corners.clear();
                scratch
                    .corners
                    .extend(stencil.neighbors.iter().map(|&v| (center[v], width[v])));
                expected_color_2d(&scratch.corners, &stencil, tf, *points, seed)?
            }
            Classifier::Bivariate { x, y, points, tf } => {
                scratch.corners.clear();
                scratch.corners.extend(idx.iter().map(|&v| (x.0[v], x.1[v])));
                scratch.corners.extend(idx.iter().map(|&v| (y.0[v], y.1[v])));
                let coef: [(f64, f64); 16] = std::array::from_fn(|i| if i < 8 { (w[i], 0.0) } else { (0.0, w[i - 8]) });
                expected_color_linear(&scratch.corners, &coef, tf, *points, seed)?
            }
        };
        Ok(Some(color))
    }
}

/// Parametric interval of the ray inside the box, clipped to `t >= 0`.
fn intersect_box(o: Vec3, d: Vec3, lo: Vec3, hi: Vec3) -> Option<(f64, f64)> {
    let mut t0: f64 = 0.0;
    let mut t1 = f64::INFINITY;
    for a in 0..3 {
        if d[a] == 0.0 {
            if o[a] < lo[a] || o[a] > hi[a] {
                return None;
            }
            continue;
        }
        let (mut ta, mut tb) = ((lo[a] - o[a]) / d[a], (hi[a] - o[a]) / d[a]);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
    }
    (t0 < t1).then_some((t0, t1))
}

/// Opacity of a sample taken at `fraction` of the reference step.
#[inline]
pub fn correct_opacity(alpha: f64, fraction: f64) -> f64 {
    let a = alpha.clamp(0.0, 1.0);
    if a >= 1.0 {
        1.0
    } else {
        1.0 - (1.0 - a).powf(fraction)
    }
}

fn trace(
    job: &RenderJob,
    classifier: &Classifier,
    px: usize,
    py: usize,
    scratch: &mut Scratch,
) -> Result<[f32; 4]> {
    let geom = &job.volume.geometry;
    let (lo, hi) = geom.bounds();
    let (o, d) = job.camera.ray(px, py);
    let mut acc = [0.0f64; 3];
    let mut alpha = 0.0f64;
    if let Some((t0, t1)) = intersect_box(o, d, lo, hi) {
        // equal sub-steps no longer than the requested one, so the total
        // optical path is exact
        let reference = geom.min_spacing();
        let n = ((t1 - t0) / (job.step * reference)).ceil().max(1.0) as u64;
        let dt = (t1 - t0) / n as f64;
        let fraction = dt / reference;
        let pixel_seed = derive_seed(job.seed, &[px as u64, py as u64]);
        for k in 0..n {
            if alpha >= job.termination {
                break;
            }
            let t = t0 + (k as f64 + 0.5) * dt;
            let p = std::array::from_fn(|a| o[a] + t * d[a]);
            if let Some(coords) = TrilinearCoords::locate(geom, p) {
                if let Some(c) = classifier.classify(geom, &coords, mix64(pixel_seed ^ k), scratch)? {
                    let a = correct_opacity(c.alpha(), fraction);
                    let wgt = (1.0 - alpha) * a;
                    for ch in 0..3 {
                        acc[ch] += wgt * c.0[ch];
                    }
                    alpha += wgt;
                }
            }
        }
    }
    let bg = job.background;
    let rest = 1.0 - alpha;
    Ok([
        (acc[0] + rest * bg.0[0]) as f32,
        (acc[1] + rest * bg.0[1]) as f32,
        (acc[2] + rest * bg.0[2]) as f32,
        (alpha + rest * bg.0[3]) as f32,
    ])
}

/// Renders the job; the output depends only on the job, not on the number
/// of worker threads.
pub fn raycast(job: &RenderJob) -> Result<Image> {
    job.validate()?;
    let classifier = Classifier::new(job);
    let (w, h) = (job.camera.width, job.camera.height);
    let mut img = Image::new(w, h);
    img.pixels
        .par_chunks_mut(w)
        .enumerate()
        .try_for_each_init(Scratch::default, |scratch, (py, row)| {
            for (px, out) in row.iter_mut().enumerate() {
                *out = trace(job, &classifier, px, py, scratch)?;
            }
            Ok::<(), Error>(())
        })?;
    Ok(img)
}

/// Piece ranges of the lower quarter, middle half and upper quarter.
pub fn quartile_pieces(q: usize) -> Result<[Range<usize>; 3]> {
    if q == 0 || !q.is_multiple_of(4) {
        return Err(Error::invalid(format!("quartile views need q divisible by 4, got {q}")));
    }
    Ok([0..q / 4, q / 4..3 * q / 4, 3 * q / 4..q])
}

/// Lower, middle and upper population renders with the quantile-range
/// scheme.
pub fn render_quartile_views(job: &RenderJob) -> Result<[Image; 3]> {
    let VoxelModel::Quantile { qval, .. } = job.volume.model() else {
        return Err(Error::SchemeMismatch {
            scheme: "quartiles".into(),
            model: job.volume.model().name().into(),
        });
    };
    let pieces = quartile_pieces((1.0 / qval).round() as usize)?;
    let render = |p: Range<usize>| {
        let mut j = job.clone();
        j.scheme = Scheme::QuantileRange;
        j.pieces = Some(p);
        raycast(&j)
    };
    let [a, b, c] = pieces;
    Ok([render(a)?, render(b)?, render(c)?])
}
