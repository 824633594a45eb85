//! Monte Carlo reference distributions and Kolmogorov-Smirnov distances.

use rand::Rng;

use crate::{Error, Result};

/// How the corner variables of `X = sum w_i X_i` are drawn jointly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// Each corner resamples its own set with its own uniform index: the
    /// convolution of the corner distributions.
    Independent,
    /// One shared uniform picks the same rank in every sorted corner set:
    /// `X = sum w_i F_i^-1(U)`, the distribution produced by blending
    /// quantile functions.
    Comonotone,
}

/// Empirical CDF over a sorted sample list.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn from_samples(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        Self { sorted: samples }
    }

    /// Caller guarantees ascending order.
    pub fn from_sorted(sorted: Vec<f64>) -> Self {
        debug_assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
        Self { sorted }
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }
}

/// `sup |F_n - F|` against a CDF `F`, checked on both sides of every jump.
pub fn ks_distance(emp: &EmpiricalCdf, cdf: impl Fn(f64) -> f64) -> f64 {
    let s = emp.samples();
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < s.len() {
        let v = s[i];
        let mut j = i;
        while j < s.len() && s[j] == v {
            j += 1;
        }
        d = d
            .max((cdf(v) - j as f64 / n).abs())
            .max((cdf(v.next_down()) - i as f64 / n).abs());
        i = j;
    }
    d
}

/// Two-sample KS distance.
pub fn ks_distance_samples(a: &EmpiricalCdf, b: &EmpiricalCdf) -> f64 {
    let (x, y) = (a.samples(), b.samples());
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / nx - j as f64 / ny).abs());
    }
    d
}

/// Realizations of `X = sum w_i X_i` drawn with replacement from the corner
/// sample sets.
pub fn mc_oracle_interp(
    sets: &[&[f64]],
    weights: &[f64],
    n: usize,
    seed: u64,
    coupling: Coupling,
) -> Result<EmpiricalCdf> {
    if sets.len() != weights.len() {
        return Err(Error::invalid(format!("{} sets for {} weights", sets.len(), weights.len())));
    }
    if let Some(p) = sets.iter().position(|s| s.is_empty()) {
        return Err(Error::invalid(format!("corner sample set {p} is empty")));
    }
    let mut rng = crate::rng::stream(seed, &[0x6f72]);
    let out = match coupling {
        Coupling::Independent => (0..n)
            .map(|_| {
                sets.iter()
                    .zip(weights)
                    .map(|(s, &w)| w * s[rng.random_range(0..s.len())])
                    .sum()
            })
            .collect(),
        Coupling::Comonotone => {
            let sorted: Vec<Vec<f64>> = sets
                .iter()
                .map(|s| {
                    let mut v = s.to_vec();
                    v.sort_by(f64::total_cmp);
                    v
                })
                .collect();
            (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    sorted
                        .iter()
                        .zip(weights)
                        .map(|(s, &w)| w * s[((u * s.len() as f64) as usize).min(s.len() - 1)])
                        .sum()
                })
                .collect()
        }
    };
    Ok(EmpiricalCdf::from_samples(out))
}
