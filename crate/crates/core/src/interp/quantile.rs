//! Quantile interpolation of piecewise-constant densities.
//!
//! Blending the `j`-th boundaries of the inputs linearly makes every piece
//! width the same linear blend of the input widths, so the interpolated
//! density of piece `j` is `qval / w_j`. This is the canonical path. The
//! density-space rational form is kept as an independent cross-check.

use crate::volume::QuantilePdf;
use crate::{Error, Result, WIDTH_EPSILON};

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    (1.0 - t) * a + t * b
}

fn same_q(pdfs: &[&QuantilePdf]) -> Result<()> {
    let q = pdfs[0].q();
    if let Some(p) = pdfs.iter().position(|p| p.q() != q) {
        return Err(Error::invalid(format!(
            "mismatched quantile counts: {} vs {} at input {p}",
            q,
            pdfs[p].q()
        )));
    }
    Ok(())
}

/// Blend between `a` (at `alpha = 0`) and `b` (at `alpha = 1`).
pub fn quantile_interp_1d(a: &QuantilePdf, b: &QuantilePdf, alpha: f64) -> Result<QuantilePdf> {
    same_q(&[a, b])?;
    let alpha = alpha.clamp(0.0, 1.0);
    let boundaries = a
        .boundaries()
        .iter()
        .zip(b.boundaries())
        .map(|(&x, &y)| lerp(x, y, alpha))
        .collect();
    Ok(QuantilePdf::new_unchecked(a.qval(), boundaries))
}

/// Trilinear quantile interpolation.
///
/// Corner `i` sits at offset `(i & 1, (i >> 1) & 1, (i >> 2) & 1)`: `alpha`
/// blends along x, `beta` along y, `gamma` along z, applied in that order.
pub fn quantile_interp_3d(corners: [&QuantilePdf; 8], alpha: f64, beta: f64, gamma: f64) -> Result<QuantilePdf> {
    same_q(&corners)?;
    let slices = corners.map(|c| c.boundaries());
    let mut out = vec![0.0; slices[0].len()];
    blend_boundaries(&slices, [alpha, beta, gamma], &mut out);
    Ok(QuantilePdf::new_unchecked(corners[0].qval(), out))
}

/// Boundary blend on raw slices (all of length `q + 1`), used by the raycaster.
#[inline]
pub fn blend_boundaries(corners: &[&[f64]; 8], [a, b, g]: [f64; 3], out: &mut [f64]) {
    let (a, b, g) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0), g.clamp(0.0, 1.0));
    for (j, o) in out.iter_mut().enumerate() {
        let e0 = lerp(corners[0][j], corners[1][j], a);
        let e1 = lerp(corners[2][j], corners[3][j], a);
        let e2 = lerp(corners[4][j], corners[5][j], a);
        let e3 = lerp(corners[6][j], corners[7][j], a);
        let f0 = lerp(e0, e1, b);
        let f1 = lerp(e2, e3, b);
        *o = lerp(f0, f1, g);
    }
}

/// Density of one interpolated piece from the eight corner densities via the
/// rational form with intermediate terms `t1..t7`.
///
/// Densities are indexed like the corners of [`quantile_interp_3d`].
pub fn rational_piece_density(p: [f64; 8], alpha: f64, beta: f64, gamma: f64) -> f64 {
    let t1 = alpha * p[0] + (1.0 - alpha) * p[1];
    let t2 = alpha * p[2] + (1.0 - alpha) * p[3];
    let t3 = alpha * p[4] + (1.0 - alpha) * p[5];
    let t4 = alpha * p[6] + (1.0 - alpha) * p[7];
    let t5 = beta * p[0] * p[1] / t1 + (1.0 - beta) * p[2] * p[3] / t2;
    let t6 = beta * p[4] * p[5] / t3 + (1.0 - beta) * p[6] * p[7] / t4;
    let t7 = gamma * p[0] * p[1] * p[2] * p[3] / (t1 * t2 * t5)
        + (1.0 - gamma) * p[4] * p[5] * p[6] * p[7] / (t3 * t4 * t6);
    // evaluate the product ratio pairwise to keep intermediates in range
    (p[0] * p[1] / t1) * (p[2] * p[3] / t2) / t5 * (p[4] * p[5] / t3) * (p[6] * p[7] / t4) / t6 / t7
}

/// Piece densities of the trilinear interpolant computed through the
/// rational form. Zero widths use the `WIDTH_EPSILON` floor.
pub fn quantile_interp_3d_rational(
    corners: [&QuantilePdf; 8],
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> Result<Vec<f64>> {
    same_q(&corners)?;
    let dens = corners.map(|c| c.densities());
    Ok((0..corners[0].q())
        .map(|j| rational_piece_density(std::array::from_fn(|i| dens[i][j]), alpha, beta, gamma))
        .collect())
}

/// Densities `qval / max(w, eps)` of a boundary list.
pub fn piece_densities(qval: f64, boundaries: &[f64]) -> Vec<f64> {
    boundaries
        .windows(2)
        .map(|w| qval / (w[1] - w[0]).max(WIDTH_EPSILON))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::trilinear_weights;
    use proptest::prelude::*;

    fn pdf(qval: f64, b: &[f64]) -> QuantilePdf {
        QuantilePdf::new(qval, b.to_vec()).unwrap()
    }

    #[test]
    fn endpoint_identity_1d() {
        let a = pdf(0.5, &[0.0, 0.3, 1.0]);
        let b = pdf(0.5, &[2.0, 2.5, 4.0]);
        assert_eq!(quantile_interp_1d(&a, &b, 0.0).unwrap(), a);
        assert_eq!(quantile_interp_1d(&a, &b, 1.0).unwrap(), b);
    }

    #[test]
    fn widths_blend_linearly() {
        // widths 2 and 4 at alpha 0.5 give width 3
        let a = pdf(1.0, &[0.0, 2.0]);
        let b = pdf(1.0, &[1.0, 5.0]);
        let r = quantile_interp_1d(&a, &b, 0.5).unwrap();
        let w: Vec<f64> = r.widths().collect();
        assert_eq!(w, vec![3.0]);
        let a4 = pdf(0.25, &[0.0, 2.0, 4.0, 6.0, 8.0]);
        let b4 = pdf(0.25, &[0.0, 4.0, 8.0, 12.0, 16.0]);
        let r4 = quantile_interp_1d(&a4, &b4, 0.5).unwrap();
        for d in r4.densities() {
            assert!((d - 0.25 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn mismatched_q_is_an_error() {
        let a = pdf(0.5, &[0.0, 1.0, 2.0]);
        let b = pdf(0.25, &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!(quantile_interp_1d(&a, &b, 0.5).is_err());
        assert!(quantile_interp_3d([&a, &a, &a, &a, &a, &a, &a, &b], 0.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn identical_corners_are_constant() {
        let a = pdf(0.25, &[-1.0, 0.0, 0.5, 0.7, 3.0]);
        let r = quantile_interp_3d([&a; 8], 0.3, 0.9, 0.1).unwrap();
        for (x, y) in r.boundaries().iter().zip(a.boundaries()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_quantile_functions_blend_to_gaussian() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let q = 1000;
        let quantiles = |mu: f64| {
            let n = Normal::new(mu, 1.0).unwrap();
            let b = (0..=q)
                .map(|j| {
                    let p = j as f64 / q as f64;
                    n.inverse_cdf(p).clamp(mu - 6.0, mu + 6.0)
                })
                .collect();
            QuantilePdf::new(0.001, b).unwrap()
        };
        let r = quantile_interp_1d(&quantiles(0.0), &quantiles(10.0), 0.3).unwrap();
        let oracle = quantiles(3.0);
        let err = r
            .boundaries()
            .iter()
            .zip(oracle.boundaries())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.02, "{err}");
    }

    fn random_pdf(seed: u64, q: usize) -> QuantilePdf {
        let mut x = (crate::rng::mix64(seed) % 1000) as f64 / 100.0;
        let mut b = vec![x];
        for j in 0..q {
            x += 1e-3 + (crate::rng::mix64(seed ^ (j as u64 + 1) << 20) % 1000) as f64 / 500.0;
            b.push(x);
        }
        QuantilePdf::new(1.0 / q as f64, b).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn rational_form_agrees_with_blend(
            seed in any::<u64>(),
            qexp in 0u32..5,
            a in 0.0f64..=1.0, b in 0.0f64..=1.0, g in 0.0f64..=1.0,
        ) {
            let q = 1usize << qexp;
            let corners: Vec<QuantilePdf> = (0..8).map(|i| random_pdf(seed.wrapping_add(i), q)).collect();
            let refs: [&QuantilePdf; 8] = std::array::from_fn(|i| &corners[i]);
            let blend = quantile_interp_3d(refs, a, b, g).unwrap().densities();
            let rational = quantile_interp_3d_rational(refs, a, b, g).unwrap();
            for (x, y) in blend.iter().zip(&rational) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs(), "{} vs {}", x, y);
            }
        }

        #[test]
        fn monotone_and_width_floor(
            seed in any::<u64>(),
            a in 0.0f64..=1.0, b in 0.0f64..=1.0, g in 0.0f64..=1.0,
        ) {
            let corners: Vec<QuantilePdf> = (0..8).map(|i| random_pdf(seed ^ (i * 977), 8)).collect();
            let refs: [&QuantilePdf; 8] = std::array::from_fn(|i| &corners[i]);
            let r = quantile_interp_3d(refs, a, b, g).unwrap();
            prop_assert!(r.boundaries().windows(2).all(|w| w[0] <= w[1]));
            let widths: Vec<f64> = r.widths().collect();
            for (j, w) in widths.iter().enumerate() {
                let min = corners.iter().map(|c| c.boundaries()[j + 1] - c.boundaries()[j]).fold(f64::INFINITY, f64::min);
                prop_assert!(*w >= min - 1e-12);
            }
        }

        #[test]
        fn blend_equals_weighted_sum(
            seed in any::<u64>(),
            a in 0.0f64..=1.0, b in 0.0f64..=1.0, g in 0.0f64..=1.0,
        ) {
            let corners: Vec<QuantilePdf> = (0..8).map(|i| random_pdf(seed ^ (i * 31), 4)).collect();
            let refs: [&QuantilePdf; 8] = std::array::from_fn(|i| &corners[i]);
            let r = quantile_interp_3d(refs, a, b, g).unwrap();
            let w = trilinear_weights([a, b, g]);
            for j in 0..5 {
                let want: f64 = (0..8).map(|i| w[i] * corners[i].boundaries()[j]).sum();
                prop_assert!((r.boundaries()[j] - want).abs() < 1e-12 * want.abs().max(1.0));
            }
        }

        #[test]
        fn separable_along_x(seed in any::<u64>(), a in 0.0f64..=1.0) {
            let p = random_pdf(seed, 8);
            let s = random_pdf(seed ^ 0xabcdef, 8);
            // x-edges pair (p, s) everywhere
            let refs = [&p, &s, &p, &s, &p, &s, &p, &s];
            let r3 = quantile_interp_3d(refs, a, 0.0, 0.0).unwrap();
            let r1 = quantile_interp_1d(&p, &s, a).unwrap();
            prop_assert_eq!(r3, r1);
        }

        #[test]
        fn shifted_copies_keep_their_shape(
            seed in any::<u64>(),
            shifts in prop::array::uniform8(-5.0f64..5.0),
            a in 0.0f64..=1.0, b in 0.0f64..=1.0, g in 0.0f64..=1.0,
        ) {
            let base = random_pdf(seed, 16);
            let corners: Vec<QuantilePdf> = shifts
                .iter()
                .map(|s| QuantilePdf::new(base.qval(), base.boundaries().iter().map(|x| x + s).collect()).unwrap())
                .collect();
            let refs: [&QuantilePdf; 8] = std::array::from_fn(|i| &corners[i]);
            let r = quantile_interp_3d(refs, a, b, g).unwrap();
            let offset = r.boundaries()[0] - base.boundaries()[0];
            for (x, y) in r.boundaries().iter().zip(base.boundaries()) {
                prop_assert!((x - y - offset).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn vertex_recovery_is_exact() {
        let corners: Vec<QuantilePdf> = (0..8).map(|i| random_pdf(i * 7 + 1, 8)).collect();
        let refs: [&QuantilePdf; 8] = std::array::from_fn(|i| &corners[i]);
        for (i, corner) in corners.iter().enumerate() {
            let t = [(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64];
            assert_eq!(&quantile_interp_3d(refs, t[0], t[1], t[2]).unwrap(), corner);
        }
    }
}
