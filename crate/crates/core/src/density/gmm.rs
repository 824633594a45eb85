//! One-dimensional Gaussian mixtures fitted by expectation maximization.

use crate::density::empirical_quantile;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmComponent {
    pub weight: f64,
    pub mean: f64,
    pub sigma: f64,
}

impl GmmComponent {
    pub const fn new(weight: f64, mean: f64, sigma: f64) -> Self {
        Self {
            weight,
            mean,
            sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    pub components: Vec<GmmComponent>,
}

impl GmmModel {
    pub fn new(components: Vec<GmmComponent>) -> Result<Self> {
        Self::validate(&components)?;
        Ok(Self { components })
    }

    pub fn validate(components: &[GmmComponent]) -> Result<()> {
        if components.is_empty() {
            return Err(Error::invalid("mixture without components"));
        }
        let mut total = 0.0;
        for c in components {
            if !(c.weight.is_finite() && c.mean.is_finite() && c.sigma.is_finite()) {
                return Err(Error::invalid("non-finite mixture parameter"));
            }
            if c.weight < 0.0 || c.sigma < 0.0 {
                return Err(Error::invalid("negative mixture weight or sigma"));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!("mixture weights sum to {total}")));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.mean).sum()
    }

    pub fn log_likelihood(&self, samples: &[f64]) -> f64 {
        samples
            .iter()
            .map(|&x| log_sum_exp(self.components.iter().map(|c| c.weight.ln() + log_normal(x, c))))
            .sum()
    }
}

fn log_normal(x: f64, c: &GmmComponent) -> f64 {
    const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;
    let z = (x - c.mean) / c.sigma;
    -0.5 * z * z - c.sigma.ln() - LN_SQRT_2PI
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Result of an EM run.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub model: GmmModel,
    /// Log-likelihood of the parameters entering each iteration, plus the
    /// final parameters as the last entry.
    pub log_likelihood: Vec<f64>,
}

pub const DEFAULT_EM_ITERATIONS: usize = 200;
const LL_TOLERANCE: f64 = 1e-8;

/// Fits `k` components with deterministic initialization: means at the
/// midpoint quantiles of `k` equal-mass pieces, sigmas at the pooled sigma
/// divided by `k`, equal weights. Sigmas never drop below
/// `1e-6 * (max - min)`.
pub fn fit_gmm_em(samples: &[f64], k: usize, max_iter: usize) -> Result<EmFit> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if samples.len() < k {
        return Err(Error::invalid(format!(
            "{k} components need at least {k} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("non-finite sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let range = sorted[n - 1] - sorted[0];
    let floor = 1e-6 * range;

    if range == 0.0 {
        let c = GmmComponent::new(1.0 / k as f64, sorted[0], floor);
        return Ok(EmFit {
            model: GmmModel {
                components: vec![c; k],
            },
            log_likelihood: Vec::new(),
        });
    }

    let mean = sorted.iter().sum::<f64>() / n as f64;
    let pooled = (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let mut comps: Vec<GmmComponent> = (0..k)
        .map(|r| {
            let p = (r as f64 + 0.5) / k as f64;
            GmmComponent::new(
                1.0 / k as f64,
                empirical_quantile(&sorted, p),
                (pooled / k as f64).max(floor),
            )
        })
        .collect();

    let mut resp = vec![0.0; n * k];
    let mut trace = Vec::new();
    let mut logs = vec![0.0; k];
    for _ in 0..max_iter {
        // E step
        let mut ll = 0.0;
        for (i, &x) in samples.iter().enumerate() {
            for (r, c) in comps.iter().enumerate() {
                logs[r] = if c.weight > 0.0 {
                    c.weight.ln() + log_normal(x, c)
                } else {
                    f64::NEG_INFINITY
                };
            }
            let lse = log_sum_exp(logs.iter().copied());
            ll += lse;
            for r in 0..k {
                resp[i * k + r] = (logs[r] - lse).exp();
            }
        }
        let converged = trace
            .last()
            .is_some_and(|&prev: &f64| (ll - prev).abs() < LL_TOLERANCE);
        trace.push(ll);
        if converged {
            break;
        }
        // M step
        for (r, c) in comps.iter_mut().enumerate() {
            let nr: f64 = (0..n).map(|i| resp[i * k + r]).sum();
            if nr <= f64::MIN_POSITIVE * n as f64 {
                c.weight = 0.0;
                continue;
            }
            let mu = (0..n).map(|i| resp[i * k + r] * samples[i]).sum::<f64>() / nr;
            let var = (0..n)
                .map(|i| resp[i * k + r] * (samples[i] - mu).powi(2))
                .sum::<f64>()
                / nr;
            *c = GmmComponent::new(nr / n as f64, mu, var.sqrt().max(floor));
        }
        let total: f64 = comps.iter().map(|c| c.weight).sum();
        comps.iter_mut().for_each(|c| c.weight /= total);
    }
    let model = GmmModel { components: comps };
    if trace.len() < max_iter + 1 {
        trace.push(model.log_likelihood(samples));
    }
    Ok(EmFit {
        model,
        log_likelihood: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::fit_gaussian;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn normals(n: usize, mu: f64, sigma: f64, seed: u64) -> Vec<f64> {
        let mut rng = crate::rng::stream(seed, &[]);
        let d = Normal::new(mu, sigma).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn single_component_is_moment_fit() {
        let s = normals(2000, 0.0, 1.0, 3);
        let fit = fit_gmm_em(&s, 1, DEFAULT_EM_ITERATIONS).unwrap();
        let (mu, sigma) = fit_gaussian(&s).unwrap();
        let c = fit.model.components[0];
        assert!((c.mean - mu).abs() < 1e-9);
        // EM maximizes likelihood: the 1/n variance, not the unbiased one
        let n = s.len() as f64;
        assert!((c.sigma - sigma * ((n - 1.0) / n).sqrt()).abs() < 1e-9);
        assert!((c.weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separated_clusters() {
        let mut s = normals(1000, 0.0, 0.5, 1);
        s.extend(normals(1000, 10.0, 0.5, 2));
        // interleave so ordering carries no information
        let mut rng = crate::rng::stream(9, &[]);
        for i in (1..s.len()).rev() {
            let j = rng.random_range(0..=i);
            s.swap(i, j);
        }
        let fit = fit_gmm_em(&s, 2, DEFAULT_EM_ITERATIONS).unwrap();
        let mut comps = fit.model.components.clone();
        comps.sort_by(|a, b| a.mean.total_cmp(&b.mean));
        // oracle: per-cluster moment fits
        let (lo, hi): (Vec<f64>, Vec<f64>) = s.iter().partition(|&&x| x < 5.0);
        let (mu_lo, _) = fit_gaussian(&lo).unwrap();
        let (mu_hi, _) = fit_gaussian(&hi).unwrap();
        assert!((comps[0].mean - mu_lo).abs() < 0.1 && comps[0].mean.abs() < 0.1);
        assert!((comps[1].mean - mu_hi).abs() < 0.1 && (comps[1].mean - 10.0).abs() < 0.1);
        assert!((comps[0].weight - 0.5).abs() < 0.05);
        assert!((comps[1].weight - 0.5).abs() < 0.05);
    }

    #[test]
    fn log_likelihood_never_decreases() {
        let mut s = normals(300, 0.0, 1.0, 5);
        s.extend(normals(200, 3.0, 0.5, 6));
        s.extend(normals(100, -4.0, 2.0, 7));
        for k in 1..=4 {
            let fit = fit_gmm_em(&s, k, 500).unwrap();
            for w in fit.log_likelihood.windows(2) {
                assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "k={k}: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn identical_samples_floor_sigma_without_nan() {
        let fit = fit_gmm_em(&[2.5; 20], 3, 50).unwrap();
        for c in &fit.model.components {
            assert_eq!(c.mean, 2.5);
            assert_eq!(c.sigma, 0.0);
            assert!(c.weight.is_finite());
        }
        GmmModel::validate(&fit.model.components).unwrap();
    }

    #[test]
    fn too_few_samples() {
        assert!(fit_gmm_em(&[1.0, 2.0], 3, 10).is_err());
        assert!(fit_gmm_em(&[1.0, 2.0], 0, 10).is_err());
    }

    #[test]
    fn duplicate_heavy_data_stays_finite() {
        let mut s = vec![0.0; 40];
        s.extend([1.0, 1.0, 1.0, 5.0]);
        let fit = fit_gmm_em(&s, 4, 200).unwrap();
        GmmModel::validate(&fit.model.components).unwrap();
        assert!(fit.model.components.iter().all(|c| c.sigma >= 5e-6));
    }
}
