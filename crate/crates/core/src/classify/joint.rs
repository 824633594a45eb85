//! Expected color of a 2D transfer function under a pair of linear
//! combinations of independent uniform voxel variables.

use crate::classify::gradient::GradientStencil;
use crate::classify::lowdisc::Kronecker;
use crate::classify::tf::{Rgba, TransferFunction2D};
use crate::{Error, Result};

pub const DEFAULT_JOINT_POINTS: usize = 256;

/// `E[TF(x, y)]` with `x = sum a_k V_k`, `y = sum b_k V_k` and each `V_k`
/// uniform with `(center, width)`. Estimated with `n` shifted Kronecker
/// points over the nonzero-width variables; exact when all widths are zero.
pub fn expected_color_linear(
    vars: &[(f64, f64)],
    coef: &[(f64, f64)],
    tf: &TransferFunction2D,
    n: usize,
    seed: u64,
) -> Result<Rgba> {
    if vars.len() != coef.len() {
        return Err(Error::invalid(format!(
            "{} variables for {} coefficient pairs",
            vars.len(),
            coef.len()
        )));
    }
    if vars.iter().any(|&(_, w)| !(w >= 0.0)) {
        return Err(Error::invalid("negative uniform width"));
    }
    let (mut x0, mut y0) = (0.0, 0.0);
    let mut spread: Vec<(f64, f64, f64)> = Vec::new();
    for (&(c, w), &(a, b)) in vars.iter().zip(coef) {
        x0 += a * c;
        y0 += b * c;
        if w > 0.0 && (a != 0.0 || b != 0.0) {
            spread.push((w, a, b));
        }
    }
    if spread.is_empty() {
        return Ok(tf.eval(x0, y0.clamp(0.0, tf.gmax())));
    }
    let n = n.max(1);
    let seq = Kronecker::new(spread.len(), seed);
    let mut pt = vec![0.0; spread.len()];
    let mut acc = Rgba::TRANSPARENT;
    for k in 0..n {
        seq.point(k, &mut pt);
        let (mut x, mut y) = (x0, y0);
        for (&(w, a, b), &v) in spread.iter().zip(&pt) {
            let d = w * (v - 0.5);
            x += a * d;
            y += b * d;
        }
        acc += tf.eval(x, y.clamp(0.0, tf.gmax()));
    }
    Ok(acc * (1.0 / n as f64))
}

/// Intensity and directional derivative of the stencil's neighbors; a
/// degenerate stencil has `u = 0` and so reads the zero-gradient row.
pub fn expected_color_2d(
    neighbors: &[(f64, f64)],
    stencil: &GradientStencil,
    tf: &TransferFunction2D,
    n: usize,
    seed: u64,
) -> Result<Rgba> {
    if neighbors.len() != stencil.len() {
        return Err(Error::invalid(format!(
            "{} neighbor models for a stencil of {}",
            neighbors.len(),
            stencil.len()
        )));
    }
    let coef: Vec<(f64, f64)> = stencil.w.iter().copied().zip(stencil.u.iter().copied()).collect();
    expected_color_linear(neighbors, &coef, tf, n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tf() -> TransferFunction2D {
        TransferFunction2D::from_fn(17, 9, 2.0, |x, y| {
            Rgba::new(x, (y / 2.0).sqrt(), (6.0 * x).sin().abs(), (x * y).min(1.0))
        })
        .unwrap()
    }

    #[test]
    fn point_masses_are_exact() {
        let vars = [(0.2, 0.0), (0.6, 0.0), (0.9, 0.0)];
        let coef = [(0.5, 1.0), (0.25, -2.0), (0.25, 3.0)];
        let got = expected_color_linear(&vars, &coef, &tf(), 64, 1).unwrap();
        let x = 0.5 * 0.2 + 0.25 * 0.6 + 0.25 * 0.9;
        let y: f64 = 0.2 - 1.2 + 2.7;
        assert_eq!(got, tf().eval(x, y));
    }

    #[test]
    fn constant_tf() {
        let c = Rgba::new(0.3, 0.2, 0.1, 0.9);
        let tf = TransferFunction2D::new(2, 2, 1.0, vec![c; 4]).unwrap();
        let got = expected_color_linear(&[(0.5, 0.3), (0.1, 0.2)], &[(0.5, 1.0), (0.5, -1.0)], &tf, 100, 4).unwrap();
        assert!(got.max_abs_diff(&c) < 1e-12);
    }

    #[test]
    fn two_variables_match_numeric_convolution() {
        let vars = [(0.4, 0.3), (0.7, 0.5)];
        let coef = [(0.6, 2.0), (0.4, 1.5)];
        let tf = tf();
        let got = expected_color_linear(&vars, &coef, &tf, 1 << 16, 7).unwrap();
        // midpoint rule over the product of the two uniforms
        let m = 1000;
        let mut acc = Rgba::TRANSPARENT;
        for i in 0..m {
            let v1 = vars[0].0 + vars[0].1 * ((i as f64 + 0.5) / m as f64 - 0.5);
            for j in 0..m {
                let v2 = vars[1].0 + vars[1].1 * ((j as f64 + 0.5) / m as f64 - 0.5);
                let x = coef[0].0 * v1 + coef[1].0 * v2;
                let y = coef[0].1 * v1 + coef[1].1 * v2;
                acc += tf.eval(x, y.clamp(0.0, tf.gmax()));
            }
        }
        let want = acc * (1.0 / (m * m) as f64);
        assert!(got.max_abs_diff(&want) < 5e-3, "{got:?} vs {want:?}");
    }

    #[test]
    fn output_stays_in_table_hull() {
        let tf = tf();
        let vars: Vec<(f64, f64)> = (0..12).map(|i| (0.05 * i as f64, 0.1 + 0.02 * i as f64)).collect();
        let coef: Vec<(f64, f64)> = (0..12).map(|i| (1.0 / 12.0, 0.3 * (i as f64 - 5.0))).collect();
        let got = expected_color_linear(&vars, &coef, &tf, 512, 2).unwrap();
        for c in 0..4 {
            let lo = tf.table().iter().map(|t| t.0[c]).fold(f64::INFINITY, f64::min);
            let hi = tf.table().iter().map(|t| t.0[c]).fold(f64::NEG_INFINITY, f64::max);
            assert!(got.0[c] >= lo - 1e-12 && got.0[c] <= hi + 1e-12);
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let vars = [(0.4, 0.3), (0.7, 0.5)];
        let coef = [(0.6, 2.0), (0.4, 1.5)];
        let a = expected_color_linear(&vars, &coef, &tf(), 300, 5).unwrap();
        let b = expected_color_linear(&vars, &coef, &tf(), 300, 5).unwrap();
        assert_eq!(a, b);
    }
}
