//! Gaussian kernel density estimation reduced to equal-mass quantiles.
//!
//! The density is evaluated on a uniform lattice spanning the sample range
//! padded by three bandwidths and integrated with the trapezoid rule. The
//! resulting piecewise-linear CDF is truncated to the observed sample range
//! `[min, max]` and renormalized, so the outermost quantile boundaries are the
//! sample extremes rather than the unbounded kernel tails.

use crate::volume::{quantile_count, QuantilePdf};
use crate::{Error, Result};

/// Below this many samples per lattice point the kernel sum is evaluated
/// directly; above it samples are linearly binned first.
const DIRECT_SAMPLES_PER_NODE: usize = 2;

/// Kernel support in bandwidths.
const KERNEL_CUTOFF: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Silverman's rule, `1.06 * sigma * n^(-1/5)`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeConfig {
    pub bandwidth: Bandwidth,
    pub lattice: usize,
}

impl Default for KdeConfig {
    fn default() -> Self {
        Self {
            bandwidth: Bandwidth::Auto,
            lattice: 512,
        }
    }
}

impl KdeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lattice < 64 {
            return Err(Error::invalid(format!(
                "KDE lattice must have at least 64 points, got {}",
                self.lattice
            )));
        }
        if let Bandwidth::Fixed(h) = self.bandwidth {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::invalid(format!("bandwidth must be positive, got {h}")));
            }
        }
        Ok(())
    }
}

pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    1.06 * var.sqrt() * n.powf(-0.2)
}

/// Lattice CDF of a kernel density estimate, truncated to the sample range.
#[derive(Debug, Clone)]
pub struct KdeCdf {
    x0: f64,
    dx: f64,
    /// Untruncated trapezoid CDF at the lattice nodes.
    cumulative: Vec<f64>,
    lo: f64,
    hi: f64,
    c_lo: f64,
    c_hi: f64,
    bandwidth: f64,
}

impl KdeCdf {
    /// Requires at least two samples with a positive range.
    pub fn build(samples: &[f64], config: &KdeConfig) -> Result<Self> {
        config.validate()?;
        if samples.len() < 2 {
            return Err(Error::invalid(format!(
                "KDE needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        let (lo, hi) = samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::invalid("non-finite sample"));
        }
        if hi <= lo {
            return Err(Error::invalid("KDE of zero-range samples"));
        }
        let h = match config.bandwidth {
            Bandwidth::Auto => silverman_bandwidth(samples),
            Bandwidth::Fixed(h) => h,
        };
        let nodes = config.lattice;
        let x0 = lo - 3.0 * h;
        let dx = (hi - lo + 6.0 * h) / (nodes - 1) as f64;
        let density = if samples.len() <= DIRECT_SAMPLES_PER_NODE * nodes {
            direct_density(samples, h, x0, dx, nodes)
        } else {
            binned_density(samples, h, x0, dx, nodes)
        };
        let mut cumulative = Vec::with_capacity(nodes);
        cumulative.push(0.0);
        for k in 1..nodes {
            let prev = cumulative[k - 1];
            cumulative.push(prev + 0.5 * dx * (density[k - 1] + density[k]));
        }
        let mut cdf = Self {
            x0,
            dx,
            cumulative,
            lo,
            hi,
            c_lo: 0.0,
            c_hi: 0.0,
            bandwidth: h,
        };
        cdf.c_lo = cdf.raw(lo);
        cdf.c_hi = cdf.raw(hi);
        if cdf.c_hi <= cdf.c_lo {
            return Err(Error::invalid("degenerate KDE: no mass inside the sample range"));
        }
        Ok(cdf)
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Piecewise-linear interpolation of the lattice CDF.
    fn raw(&self, x: f64) -> f64 {
        let t = (x - self.x0) / self.dx;
        let last = self.cumulative.len() - 1;
        if t <= 0.0 {
            return 0.0;
        }
        if t >= last as f64 {
            return self.cumulative[last];
        }
        let k = (t.floor() as usize).min(last - 1);
        let f = t - k as f64;
        self.cumulative[k] + f * (self.cumulative[k + 1] - self.cumulative[k])
    }

    /// Truncated, renormalized CDF.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return 1.0;
        }
        ((self.raw(x) - self.c_lo) / (self.c_hi - self.c_lo)).clamp(0.0, 1.0)
    }

    /// Smallest `x` with `eval(x) = mass`, by linear inversion of the lattice CDF.
    pub fn inverse(&self, mass: f64) -> f64 {
        if mass <= 0.0 {
            return self.lo;
        }
        if mass >= 1.0 {
            return self.hi;
        }
        let target = self.c_lo + mass * (self.c_hi - self.c_lo);
        let c = &self.cumulative;
        // first node with cumulative >= target; node 0 has 0 < target
        let k = c.partition_point(|&v| v < target).clamp(1, c.len() - 1);
        let (a, b) = (c[k - 1], c[k]);
        let f = if b > a { (target - a) / (b - a) } else { 1.0 };
        let x = self.x0 + (k as f64 - 1.0 + f) * self.dx;
        x.clamp(self.lo, self.hi)
    }
}

/// Direct kernel sum. The Gaussian on the lattice is advanced by the
/// ratio recurrence `g[k+1] = g[k] * r[k]`, `r[k+1] = r[k] * exp(-dx^2/h^2)`
/// outward from the node nearest each sample.
fn direct_density(samples: &[f64], h: f64, x0: f64, dx: f64, nodes: usize) -> Vec<f64> {
    let mut acc = vec![0.0; nodes];
    let inv2h2 = 0.5 / (h * h);
    let step_decay = (-dx * dx / (h * h)).exp();
    let reach = ((KERNEL_CUTOFF * h / dx).ceil() as usize).min(nodes);
    for &s in samples {
        let t = (s - x0) / dx;
        let k0 = (t.round() as isize).clamp(0, nodes as isize - 1) as usize;
        let d0 = x0 + k0 as f64 * dx - s;
        let g0 = (-d0 * d0 * inv2h2).exp();
        acc[k0] += g0;
        // upward: ratio g(k+1)/g(k) = exp(-(2 d dx + dx^2) / 2h^2)
        let mut g = g0;
        let mut r = (-(2.0 * d0 * dx + dx * dx) * inv2h2).exp();
        for k in k0 + 1..(k0 + reach + 1).min(nodes) {
            g *= r;
            r *= step_decay;
            acc[k] += g;
        }
        let mut g = g0;
        let mut r = (-(-2.0 * d0 * dx + dx * dx) * inv2h2).exp();
        for k in (k0.saturating_sub(reach)..k0).rev() {
            g *= r;
            r *= step_decay;
            acc[k] += g;
        }
    }
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    acc.iter_mut().for_each(|v| *v *= norm);
    acc
}

/// Linear binning onto the lattice followed by a discrete kernel convolution.
fn binned_density(samples: &[f64], h: f64, x0: f64, dx: f64, nodes: usize) -> Vec<f64> {
    let mut counts = vec![0.0; nodes];
    for &s in samples {
        let t = ((s - x0) / dx).clamp(0.0, (nodes - 1) as f64);
        let k = (t.floor() as usize).min(nodes - 2);
        let f = t - k as f64;
        counts[k] += 1.0 - f;
        counts[k + 1] += f;
    }
    let reach = ((KERNEL_CUTOFF * h / dx).ceil() as usize).min(nodes - 1);
    let kernel: Vec<f64> = (0..=reach)
        .map(|d| {
            let z = d as f64 * dx / h;
            (-0.5 * z * z).exp()
        })
        .collect();
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    (0..nodes)
        .map(|k| {
            let lo = k.saturating_sub(reach);
            let hi = (k + reach).min(nodes - 1);
            (lo..=hi)
                .map(|m| counts[m] * kernel[k.abs_diff(m)])
                .sum::<f64>()
                * norm
        })
        .collect()
}

/// Quantile representation of a sample set through its KDE.
///
/// Zero-range inputs yield a point mass.
pub fn estimate_quantiles(samples: &[f64], qval: f64, config: &KdeConfig) -> Result<QuantilePdf> {
    if samples.len() < 2 {
        return Err(Error::invalid(format!(
            "quantile estimation needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let q = quantile_count(qval)?;
    let first = samples[0];
    if samples.iter().all(|&x| x == first) {
        config.validate()?;
        return Ok(QuantilePdf::new_unchecked(qval, vec![first; q + 1]));
    }
    let cdf = KdeCdf::build(samples, config)?;
    let boundaries = (0..=q).map(|j| cdf.inverse(j as f64 / q as f64)).collect();
    Ok(QuantilePdf::new_unchecked(qval, boundaries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn uniform_samples(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = crate::rng::stream(seed, &[]);
        (0..n).map(|_| rng.random::<f64>()).collect()
    }

    /// Reference density by brute-force kernel sums.
    fn brute_density(samples: &[f64], h: f64, x: f64) -> f64 {
        samples
            .iter()
            .map(|s| (-0.5 * ((x - s) / h).powi(2)).exp())
            .sum::<f64>()
            / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt())
    }

    #[test]
    fn direct_and_binned_densities_match_brute_force() {
        let samples = uniform_samples(3000, 4);
        let h = silverman_bandwidth(&samples);
        let (x0, dx, nodes) = (-3.0 * h, (1.0 + 6.0 * h) / 511.0, 512);
        let direct = direct_density(&samples, h, x0, dx, nodes);
        let binned = binned_density(&samples, h, x0, dx, nodes);
        for k in (0..nodes).step_by(17) {
            let want = brute_density(&samples, h, x0 + k as f64 * dx);
            assert!((direct[k] - want).abs() < 1e-9 * want.max(1.0), "k={k}");
            assert!((binned[k] - want).abs() < 2e-2 * want.max(0.1), "k={k}");
        }
    }

    #[test]
    fn constant_samples_give_point_mass() {
        let p = estimate_quantiles(&[0.7; 10], 0.25, &KdeConfig::default()).unwrap();
        assert!(p.boundaries().iter().all(|&b| b == 0.7));
    }

    #[test]
    fn octiles_have_eight_pieces() {
        let p = estimate_quantiles(&uniform_samples(500, 1), 0.125, &KdeConfig::default()).unwrap();
        assert_eq!(p.q(), 8);
        assert_eq!(p.boundaries().len(), 9);
    }

    #[test]
    fn uniform_quartiles_converge() {
        let p = estimate_quantiles(&uniform_samples(1_000_000, 2), 0.25, &KdeConfig::default())
            .unwrap();
        for (b, want) in p.boundaries().iter().zip([0.0, 0.25, 0.5, 0.75, 1.0]) {
            assert!((b - want).abs() < 0.01, "{b} vs {want}");
        }
    }

    #[test]
    fn errors() {
        let cfg = KdeConfig::default();
        assert!(estimate_quantiles(&[1.0], 0.5, &cfg).is_err());
        assert!(estimate_quantiles(&[1.0, 2.0], 0.3, &cfg).is_err());
        let small = KdeConfig {
            lattice: 32,
            ..cfg
        };
        assert!(estimate_quantiles(&[1.0, 2.0], 0.5, &small).is_err());
        let bad_h = KdeConfig {
            bandwidth: Bandwidth::Fixed(0.0),
            ..cfg
        };
        assert!(estimate_quantiles(&[1.0, 2.0], 0.5, &bad_h).is_err());
    }

    /// Mean absolute deviation between estimated and true percentiles of
    /// U(0,1), a discretized Wasserstein-1 distance.
    fn w1_uniform(n: usize) -> f64 {
        let p = estimate_quantiles(&uniform_samples(n, 77), 0.01, &KdeConfig::default()).unwrap();
        p.boundaries()
            .iter()
            .enumerate()
            .map(|(j, b)| (b - j as f64 * 0.01).abs())
            .sum::<f64>()
            / 101.0
    }

    #[test]
    fn wasserstein_error_shrinks_with_sample_count() {
        let w = [w1_uniform(100), w1_uniform(10_000), w1_uniform(1_000_000)];
        assert!(w[0] > w[1] && w[1] > w[2], "{w:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn boundaries_monotone_and_cdf_consistent(
            samples in prop::collection::vec(-5.0f64..5.0, 2..200),
            qexp in 0u32..5,
        ) {
            let qval = 1.0 / (1u32 << qexp) as f64;
            let cfg = KdeConfig::default();
            let p = estimate_quantiles(&samples, qval, &cfg).unwrap();
            prop_assert!(p.boundaries().windows(2).all(|w| w[0] <= w[1]));
            let first = samples[0];
            if samples.iter().any(|&x| x != first) {
                let cdf = KdeCdf::build(&samples, &cfg).unwrap();
                for (j, &b) in p.boundaries().iter().enumerate() {
                    let mass = j as f64 * qval;
                    // flat stretches of the CDF may map several masses to one point
                    let c = cdf.eval(b);
                    prop_assert!((c - mass).abs() < 1e-9, "j={} cdf={} mass={}", j, c, mass);
                }
            }
        }
    }
}
