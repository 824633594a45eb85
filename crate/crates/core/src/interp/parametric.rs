//! Interpolation rules for the parametric baselines.
//!
//! Each rule models the sample value as `X = sum w_i X_i` with independent
//! voxel variables.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::density::gmm::{GmmComponent, GmmModel};
use crate::{Error, Result};

fn check_weights(n: usize, weights: &[f64]) -> Result<()> {
    if weights.len() != n {
        return Err(Error::invalid(format!("{} weights for {n} inputs", weights.len())));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid("weights must be finite and nonnegative"));
    }
    Ok(())
}

/// Weighted sum of independent Gaussians: returns `(mean, sigma)`.
pub fn interp_gaussian(corners: &[(f64, f64)], weights: &[f64]) -> (f64, f64) {
    let mut mu = 0.0;
    let mut var = 0.0;
    for (&(m, s), &w) in corners.iter().zip(weights) {
        mu += w * m;
        var += w * w * s * s;
    }
    (mu, var.sqrt())
}

/// Density on an evenly spaced lattice, linear between nodes.
///
/// A spacing of zero denotes a point mass at `x0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDensity {
    pub x0: f64,
    pub h: f64,
    pub density: Vec<f64>,
}

impl LatticeDensity {
    pub fn point_mass(x: f64) -> Self {
        Self {
            x0: x,
            h: 0.0,
            density: vec![1.0],
        }
    }

    pub fn is_point_mass(&self) -> bool {
        self.h == 0.0
    }

    pub fn node(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.h
    }

    /// Trapezoid masses at the nodes; they sum to one.
    pub fn masses(&self) -> Vec<f64> {
        if self.is_point_mass() {
            return vec![1.0];
        }
        let n = self.density.len();
        let mut m: Vec<f64> = self
            .density
            .iter()
            .enumerate()
            .map(|(k, d)| if k == 0 || k + 1 == n { 0.5 * d * self.h } else { d * self.h })
            .collect();
        let total: f64 = m.iter().sum();
        m.iter_mut().for_each(|v| *v /= total);
        m
    }

    pub fn mean(&self) -> f64 {
        self.masses()
            .iter()
            .enumerate()
            .map(|(k, m)| m * self.node(k))
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if self.is_point_mass() {
            return if x >= self.x0 { 1.0 } else { 0.0 };
        }
        let total = trapezoid_total(&self.density, self.h);
        let u = (x - self.x0) / self.h;
        if u <= 0.0 {
            return 0.0;
        }
        let n = self.density.len();
        if u >= (n - 1) as f64 {
            return 1.0;
        }
        let j = u.floor() as usize;
        let below: f64 = (0..j)
            .map(|k| 0.5 * (self.density[k] + self.density[k + 1]) * self.h)
            .sum();
        ((below + partial_cell(&self.density, self.h, j, (u - j as f64) * self.h)) / total).clamp(0.0, 1.0)
    }
}

fn trapezoid_total(f: &[f64], h: f64) -> f64 {
    f.windows(2).map(|w| 0.5 * (w[0] + w[1]) * h).sum()
}

/// Integral of the linear interpolant over `[x_j, x_j + d]`.
#[inline]
fn partial_cell(f: &[f64], h: f64, j: usize, d: f64) -> f64 {
    f[j] * d + (f[j + 1] - f[j]) * d * d / (2.0 * h)
}

/// Density of `sum w_i U(c_i - W_i/2, c_i + W_i/2)` on a lattice of
/// `lattice` cells spanning the support.
///
/// The lattice starts from a one-cell hat at the lower support end and
/// convolves one scaled box at a time through the running antiderivative,
/// so each factor costs linear time. Zero-width factors only shift.
pub fn interp_uniform(corners: &[(f64, f64)], weights: &[f64], lattice: usize) -> Result<LatticeDensity> {
    check_weights(corners.len(), weights)?;
    if corners.iter().any(|&(_, w)| !(w >= 0.0)) {
        return Err(Error::invalid("negative uniform width"));
    }
    let lattice = lattice.max(2);
    let lo: f64 = corners.iter().zip(weights).map(|(&(c, w), &t)| t * (c - 0.5 * w)).sum();
    let hi: f64 = corners.iter().zip(weights).map(|(&(c, w), &t)| t * (c + 0.5 * w)).sum();
    let span = hi - lo;
    if !(span > 1e-12 * lo.abs().max(hi.abs()).max(1.0)) {
        return Ok(LatticeDensity::point_mass(0.5 * (lo + hi)));
    }
    let h = span / lattice as f64;
    // nodes lo - h .. hi + h
    let n = lattice + 3;
    let mut f = vec![0.0; n];
    f[1] = 1.0 / h;
    let mut cum = vec![0.0; n];
    let mut next = vec![0.0; n];
    for (&(_, width), &w) in corners.iter().zip(weights) {
        let s = w * width;
        if s <= 0.0 {
            continue;
        }
        cum[0] = 0.0;
        for k in 1..n {
            cum[k] = cum[k - 1] + 0.5 * (f[k - 1] + f[k]) * h;
        }
        let antiderivative = |x: f64| -> f64 {
            // x measured from node 0
            if x <= 0.0 {
                return 0.0;
            }
            let u = x / h;
            if u >= (n - 1) as f64 {
                return cum[n - 1];
            }
            let j = u.floor() as usize;
            cum[j] + partial_cell(&f, h, j, x - j as f64 * h)
        };
        for (k, out) in next.iter_mut().enumerate() {
            let x = k as f64 * h;
            *out = ((cum[k] - antiderivative(x - s)) / s).max(0.0);
        }
        std::mem::swap(&mut f, &mut next);
    }
    let total = trapezoid_total(&f, h);
    f.iter_mut().for_each(|v| *v /= total);
    Ok(LatticeDensity {
        x0: lo - h,
        h,
        density: f,
    })
}

/// Rank-matched mixture interpolation: components of every corner are sorted
/// by mean (ties by sigma, then weight) and same-rank components are blended
/// like independent Gaussians; weights blend linearly and are renormalized.
pub fn interp_gmm_ordered(corners: &[&[GmmComponent]], weights: &[f64]) -> Result<GmmModel> {
    check_weights(corners.len(), weights)?;
    let Some(first) = corners.first() else {
        return Err(Error::invalid("no mixtures to interpolate"));
    };
    let k = first.len();
    if let Some(p) = corners.iter().position(|c| c.len() != k) {
        return Err(Error::invalid(format!(
            "mismatched component counts: {k} vs {} at corner {p}",
            corners[p].len()
        )));
    }
    let mut out = vec![GmmComponent::new(0.0, 0.0, 0.0); k];
    let mut sorted = Vec::with_capacity(k);
    let mut var = vec![0.0; k];
    for (comps, &w) in corners.iter().zip(weights) {
        sorted.clear();
        sorted.extend_from_slice(comps);
        sort_components(&mut sorted);
        for (r, c) in sorted.iter().enumerate() {
            out[r].weight += w * c.weight;
            out[r].mean += w * c.mean;
            var[r] += w * w * c.sigma * c.sigma;
        }
    }
    let total: f64 = out.iter().map(|c| c.weight).sum();
    if !(total > 0.0) {
        return Err(Error::invalid("interpolated mixture has zero total weight"));
    }
    for (c, v) in out.iter_mut().zip(&var) {
        c.weight /= total;
        c.sigma = v.sqrt();
    }
    Ok(GmmModel { components: out })
}

pub(crate) fn sort_components(c: &mut [GmmComponent]) {
    c.sort_by(|a, b| {
        a.mean
            .total_cmp(&b.mean)
            .then(a.sigma.total_cmp(&b.sigma))
            .then(a.weight.total_cmp(&b.weight))
    });
}

/// Draws one realization of `sum w_i X_i` with each `X_i` from its mixture.
pub fn draw_gmm_sum<R: Rng + ?Sized>(corners: &[&[GmmComponent]], weights: &[f64], rng: &mut R) -> f64 {
    let mut x = 0.0;
    for (comps, &w) in corners.iter().zip(weights) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = comps[comps.len() - 1];
        for c in comps.iter() {
            acc += c.weight;
            if u < acc {
                pick = *c;
                break;
            }
        }
        let z: f64 = StandardNormal.sample(rng);
        x += w * (pick.mean + pick.sigma * z);
    }
    x
}

/// Monte Carlo realizations of the interpolated mixture sum, sorted.
pub fn sample_gmm_mc(corners: &[&[GmmComponent]], weights: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
    check_weights(corners.len(), weights)?;
    if corners.iter().any(|c| c.is_empty()) {
        return Err(Error::invalid("mixture without components"));
    }
    let mut rng = crate::rng::stream(seed, &[0x6d63]);
    let mut out: Vec<f64> = (0..n).map(|_| draw_gmm_sum(corners, weights, &mut rng)).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::oracle::{ks_distance, mc_oracle_interp, Coupling, EmpiricalCdf};
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn gaussian_rules() {
        let zero: Vec<(f64, f64)> = (0..8).map(|i| (i as f64, 0.0)).collect();
        let w = [0.125; 8];
        let (mu, s) = interp_gaussian(&zero, &w);
        assert!((mu - 3.5).abs() < 1e-15 && s == 0.0);
        let mut hot = [0.0; 8];
        hot[5] = 1.0;
        let c: Vec<(f64, f64)> = (0..8).map(|i| (i as f64, 0.1 * i as f64)).collect();
        assert_eq!(interp_gaussian(&c, &hot), (5.0, 0.5));
        let ones = [(0.0, 1.0); 8];
        let (_, s) = interp_gaussian(&ones, &w);
        // sqrt(8 * (1/8)^2)
        assert!((s - (8.0f64 * 0.015625).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn uniform_point_mass() {
        let c = [(0.2, 0.0), (0.6, 0.0)];
        let d = interp_uniform(&c, &[0.5, 0.5], 256).unwrap();
        assert!(d.is_point_mass());
        assert!((d.x0 - 0.4).abs() < 1e-15);
    }

    #[test]
    fn uniform_two_factor_triangle() {
        let d = interp_uniform(&[(0.5, 1.0), (0.5, 1.0)], &[0.5, 0.5], 512).unwrap();
        let tri = |x: f64| {
            if x <= 0.0 {
                0.0
            } else if x <= 0.5 {
                2.0 * x * x
            } else if x <= 1.0 {
                1.0 - 2.0 * (1.0 - x) * (1.0 - x)
            } else {
                1.0
            }
        };
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((d.cdf(x) - tri(x)).abs() < 2e-3, "x={x}: {} vs {}", d.cdf(x), tri(x));
        }
        // peak density 2 at the centre
        let k = ((0.5 - d.x0) / d.h).round() as usize;
        assert!((d.density[k] - 2.0).abs() < 0.03, "{}", d.density[k]);
        assert!((d.mean() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn uniform_matches_resampling_oracle() {
        let corners = [(0.5, 1.0); 8];
        let w = [0.125; 8];
        let d = interp_uniform(&corners, &w, 512).unwrap();
        let sets: Vec<Vec<f64>> = (0..8)
            .map(|i| {
                let mut rng = crate::rng::stream(11, &[i]);
                (0..20_000).map(|_| rng.random::<f64>()).collect()
            })
            .collect();
        let refs: Vec<&[f64]> = sets.iter().map(|s| s.as_slice()).collect();
        let oracle = mc_oracle_interp(&refs, &w, 200_000, 4, Coupling::Independent).unwrap();
        let ks = ks_distance(&oracle, |x| d.cdf(x));
        assert!(ks < 0.02, "{ks}");
    }

    #[test]
    fn uniform_shift_only_factors() {
        let d = interp_uniform(&[(0.0, 1.0), (3.0, 0.0)], &[0.5, 0.5], 256).unwrap();
        // U(-0.25, 0.25) shifted by 1.5
        assert!((d.mean() - 1.5).abs() < 1e-9);
        assert!(d.cdf(1.74) < 1.0 && d.cdf(1.75 + 2.0 * d.h) == 1.0);
        assert!(d.cdf(1.26) > 0.0 && d.cdf(1.25 - 2.0 * d.h) == 0.0);
    }

    #[test]
    fn ordered_gmm_rules() {
        let g = [GmmComponent::new(0.3, -1.0, 0.2), GmmComponent::new(0.7, 2.0, 0.5)];
        let corners: Vec<&[GmmComponent]> = vec![&g; 8];
        let out = interp_gmm_ordered(&corners, &[0.125; 8]).unwrap();
        for (a, b) in out.components.iter().zip(&g) {
            assert!((a.weight - b.weight).abs() < 1e-12);
            assert!((a.mean - b.mean).abs() < 1e-12);
        }
        // single component reduces to the Gaussian rule
        let singles: Vec<[GmmComponent; 1]> = (0..8).map(|i| [GmmComponent::new(1.0, i as f64, 0.1 + i as f64)]).collect();
        let refs: Vec<&[GmmComponent]> = singles.iter().map(|s| s.as_slice()).collect();
        let w = crate::interp::trilinear_weights([0.2, 0.7, 0.4]);
        let out = interp_gmm_ordered(&refs, &w).unwrap();
        let pairs: Vec<(f64, f64)> = singles.iter().map(|s| (s[0].mean, s[0].sigma)).collect();
        let (mu, s) = interp_gaussian(&pairs, &w);
        assert!((out.components[0].mean - mu).abs() < 1e-12);
        assert!((out.components[0].sigma - s).abs() < 1e-12);
    }

    #[test]
    fn ordered_gmm_ignores_component_order() {
        let a = [GmmComponent::new(0.4, 0.0, 0.1), GmmComponent::new(0.6, 1.0, 0.3)];
        let b = [a[1], a[0]];
        let c = [GmmComponent::new(0.5, 3.0, 0.2), GmmComponent::new(0.5, -2.0, 0.1)];
        let w = [0.25, 0.75];
        let x = interp_gmm_ordered(&[&a, &c], &w).unwrap();
        let y = interp_gmm_ordered(&[&b, &c], &w).unwrap();
        assert_eq!(x, y);
        assert!(interp_gmm_ordered(&[&a, &c[..1]], &w).is_err());
    }

    #[test]
    fn gmm_mc_degenerate_and_deterministic() {
        let g: Vec<[GmmComponent; 1]> = (0..8).map(|i| [GmmComponent::new(1.0, i as f64, 0.0)]).collect();
        let refs: Vec<&[GmmComponent]> = g.iter().map(|s| s.as_slice()).collect();
        let s = sample_gmm_mc(&refs, &[0.125; 8], 1000, 1).unwrap();
        assert!(s.iter().all(|&x| (x - 3.5).abs() < 1e-12));
        let g2 = [GmmComponent::new(0.5, 0.0, 1.0), GmmComponent::new(0.5, 4.0, 1.0)];
        let r: Vec<&[GmmComponent]> = vec![&g2; 8];
        assert_eq!(
            sample_gmm_mc(&r, &[0.125; 8], 500, 9).unwrap(),
            sample_gmm_mc(&r, &[0.125; 8], 500, 9).unwrap()
        );
    }

    #[test]
    fn gmm_mc_matches_gaussian_rule_for_single_components() {
        let g: Vec<[GmmComponent; 1]> = (0..8).map(|i| [GmmComponent::new(1.0, 0.1 * i as f64, 0.05 + 0.02 * i as f64)]).collect();
        let refs: Vec<&[GmmComponent]> = g.iter().map(|s| s.as_slice()).collect();
        let w = crate::interp::trilinear_weights([0.3, 0.6, 0.9]);
        let s = sample_gmm_mc(&refs, &w, 1_000_000, 21).unwrap();
        let pairs: Vec<(f64, f64)> = g.iter().map(|c| (c[0].mean, c[0].sigma)).collect();
        let (mu, sigma) = interp_gaussian(&pairs, &w);
        let n = Normal::new(mu, sigma).unwrap();
        let ks = ks_distance(&EmpiricalCdf::from_sorted(s), |x| n.cdf(x));
        assert!(ks < 0.01, "{ks}");
    }
}
