//! Shared fixtures for the benchmarks in `benches/`.

use rand::Rng;
use uqdvr_core::density::build_distribution_volume;
use uqdvr_core::rng::stream;
use uqdvr_core::synth::{make_ensemble, sample_field, Field, NoiseKind, NoiseSpec};
use uqdvr_core::{Camera, DistributionVolume, ModelSpec, QuantilePdf, Rgba, TransferFunction1D};

/// Eight random quantile PDFs with `q` pieces each.
pub fn random_corners(q: usize, seed: u64) -> [QuantilePdf; 8] {
    let mut rng = stream(seed, &[q as u64]);
    std::array::from_fn(|_| {
        let mut b: Vec<f64> = (0..=q).map(|_| rng.random::<f64>()).collect();
        b.sort_by(f64::total_cmp);
        QuantilePdf::new(1.0 / q as f64, b).unwrap()
    })
}

/// Noisy samples from a two-mode mixture.
pub fn bimodal_samples(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, &[]);
    let noise = NoiseKind::bimodal();
    (0..n).map(|_| 0.5 + noise.draw(&mut rng)).collect()
}

/// Tangle ensemble of `members` bimodal-noise members fitted with `spec`.
pub fn tangle_volume(n: usize, members: usize, spec: &ModelSpec) -> DistributionVolume {
    let gt = sample_field(&Field::Tangle, [n; 3], None).unwrap();
    let noise = NoiseSpec::new(NoiseKind::bimodal(), 1, members).unwrap();
    build_distribution_volume(&make_ensemble(&gt, &noise).unwrap(), spec).unwrap()
}

pub fn camera(volume: &DistributionVolume, size: usize) -> Camera {
    let (lo, hi) = volume.geometry.bounds();
    Camera::framing(lo, hi, size, size).unwrap()
}

pub fn ramp_tf() -> TransferFunction1D {
    TransferFunction1D::new(vec![
        (0.0, Rgba::TRANSPARENT),
        (0.3, Rgba::new(0.9, 0.4, 0.1, 0.3)),
        (0.6, Rgba::new(0.2, 0.4, 1.0, 0.05)),
        (1.0, Rgba::new(1.0, 1.0, 1.0, 0.0)),
    ])
    .unwrap()
}
