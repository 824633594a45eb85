//! Expected color of a transfer function under a sample's distribution.

use std::ops::Range;
use std::sync::OnceLock;

use crate::classify::tf::{Rgba, TransferFunction1D};
use crate::density::gmm::GmmComponent;
use crate::interp::LatticeDensity;
use crate::volume::QuantilePdf;
use crate::WIDTH_EPSILON;

/// Average of the TF over every piece, each piece weighted by its mass.
pub fn expected_color_quantile_range(pdf: &QuantilePdf, tf: &TransferFunction1D) -> Rgba {
    quantile_range_color(pdf.boundaries(), 0..pdf.q(), tf)
}

/// Quantile-range color restricted to `pieces`, renormalized to unit mass.
/// All pieces carry equal mass, so this is the mean of the piece averages.
pub fn quantile_range_color(boundaries: &[f64], pieces: Range<usize>, tf: &TransferFunction1D) -> Rgba {
    let n = pieces.len();
    let mut acc = Rgba::TRANSPARENT;
    for j in pieces {
        acc += tf.average(boundaries[j], boundaries[j + 1]);
    }
    acc * (1.0 / n as f64)
}

/// TF at the piece midpoints, weighted by the normalized piece densities.
pub fn expected_color_quantile_mean(pdf: &QuantilePdf, tf: &TransferFunction1D) -> Rgba {
    quantile_mean_color(pdf.qval(), pdf.boundaries(), tf)
}

pub fn quantile_mean_color(qval: f64, boundaries: &[f64], tf: &TransferFunction1D) -> Rgba {
    let mut total = 0.0;
    for w in boundaries.windows(2) {
        total += qval / (w[1] - w[0]).max(WIDTH_EPSILON);
    }
    let mut acc = Rgba::TRANSPARENT;
    for w in boundaries.windows(2) {
        let p = qval / (w[1] - w[0]).max(WIDTH_EPSILON) / total;
        acc += tf.eval(0.5 * (w[0] + w[1])) * p;
    }
    acc
}

/// Discrete weights used by [`quantile_mean_color`].
pub fn quantile_mean_weights(qval: f64, boundaries: &[f64]) -> Vec<f64> {
    let d: Vec<f64> = boundaries
        .windows(2)
        .map(|w| qval / (w[1] - w[0]).max(WIDTH_EPSILON))
        .collect();
    let total: f64 = d.iter().sum();
    d.into_iter().map(|v| v / total).collect()
}

pub const GAUSS_HERMITE_NODES: usize = 128;

/// Nodes and weights for the weight function `exp(-x^2)`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z: f64 = 0.0;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 3e-14 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Standard-normal quadrature: `E[f(Z)] ~ sum p_k f(z_k)`. Nodes whose
/// probability is below 1e-18 are dropped.
fn normal_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_hermite(GAUSS_HERMITE_NODES);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        x.iter()
            .zip(&w)
            .map(|(&x, &w)| (std::f64::consts::SQRT_2 * x, w / sqrt_pi))
            .filter(|&(_, p)| p > 1e-18)
            .collect()
    })
}

pub fn expected_color_gaussian(mean: f64, sigma: f64, tf: &TransferFunction1D) -> Rgba {
    if sigma == 0.0 {
        return tf.eval(mean);
    }
    let mut acc = Rgba::TRANSPARENT;
    for &(z, p) in normal_rule() {
        acc += tf.eval(mean + sigma * z) * p;
    }
    acc
}

pub fn expected_color_gmm(components: &[GmmComponent], tf: &TransferFunction1D) -> Rgba {
    let mut acc = Rgba::TRANSPARENT;
    for c in components {
        acc += expected_color_gaussian(c.mean, c.sigma, tf) * c.weight;
    }
    acc
}

pub fn expected_color_lattice(d: &LatticeDensity, tf: &TransferFunction1D) -> Rgba {
    if d.is_point_mass() {
        return tf.eval(d.x0);
    }
    let mut acc = Rgba::TRANSPARENT;
    for (k, m) in d.masses().into_iter().enumerate() {
        acc += tf.eval(d.node(k)) * m;
    }
    acc
}

/// A sample's distribution under one of the parametric baselines.
#[derive(Debug, Clone, PartialEq)]
pub enum ParametricSample {
    Scalar(f64),
    Gaussian { mean: f64, sigma: f64 },
    Lattice(LatticeDensity),
    Gmm(Vec<GmmComponent>),
}

pub fn expected_color_parametric(sample: &ParametricSample, tf: &TransferFunction1D) -> Rgba {
    match sample {
        ParametricSample::Scalar(x) => tf.eval(*x),
        ParametricSample::Gaussian { mean, sigma } => expected_color_gaussian(*mean, *sigma, tf),
        ParametricSample::Lattice(d) => expected_color_lattice(d, tf),
        ParametricSample::Gmm(c) => expected_color_gmm(c, tf),
    }
}
