//! Fuzzy fiber surface of the synthetic bivariate pair.

use std::collections::VecDeque;

use uqdvr_core::render::raycast;
use uqdvr_core::synth::make_bivariate;
use uqdvr_core::{Camera, DistributionVolume, Rgba, RenderJob, Scheme, TransferFunction2D, VoxelModel};

const N: usize = 128;

/// Signed distance-like value to the range-space curve `x = 0.5 + 0.1 (y - 0.5)`.
fn curve(x: f64, y: f64) -> f64 {
    x - 0.5 - 0.1 * (y - 0.5)
}

#[test]
fn thin_curve_paints_a_connected_surface() {
    let (f1, f2) = make_bivariate([N; 3]).unwrap();
    let g = f1.geometry;
    let h: Vec<f64> = f1.values.iter().zip(&f2.values).map(|(&x, &y)| curve(x, y)).collect();

    // voxels with a sign change towards a face neighbor
    let mut surface = vec![false; h.len()];
    for v in 0..h.len() {
        let p = g.unravel(v);
        for a in 0..3 {
            if p[a] + 1 < N {
                let mut q = p;
                q[a] += 1;
                let u = g.linear(q);
                if (h[v] <= 0.0) != (h[u] <= 0.0) {
                    surface[v] = true;
                    surface[u] = true;
                }
            }
        }
    }
    let count = surface.iter().filter(|&&s| s).count();
    assert!(count > 1000, "surface has {count} voxels");

    let start = surface.iter().position(|&s| s).unwrap();
    let mut seen = vec![false; h.len()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    let mut reached = 0;
    while let Some(v) = queue.pop_front() {
        reached += 1;
        let p = g.unravel(v).map(|c| c as isize);
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let q = [p[0] + dx, p[1] + dy, p[2] + dz];
                    if q.iter().any(|&c| c < 0 || c >= N as isize) {
                        continue;
                    }
                    let u = g.linear(q.map(|c| c as usize));
                    if surface[u] && !seen[u] {
                        seen[u] = true;
                        queue.push_back(u);
                    }
                }
            }
        }
    }
    assert_eq!(reached, count, "surface splits into several 26-connected pieces");

    let tf = TransferFunction2D::from_fn(257, 257, 1.0, |x, y| {
        if curve(x, y).abs() < 0.01 {
            Rgba::new(1.0, 0.8, 0.2, 0.9)
        } else {
            Rgba::TRANSPARENT
        }
    })
    .unwrap();
    let primary = DistributionVolume::new(g, VoxelModel::MeanField(f1.values)).unwrap();
    let secondary = DistributionVolume::new(g, VoxelModel::MeanField(f2.values)).unwrap();
    let (lo, hi) = g.bounds();
    let camera = Camera::framing(lo, hi, 64, 64).unwrap();
    let job = RenderJob::new(&primary, Scheme::Bivariate, camera)
        .with_tf2d(tf)
        .with_secondary(&secondary)
        .with_background(Rgba::TRANSPARENT);
    let img = raycast(&job).unwrap();
    let opaque = img.pixels.iter().filter(|p| p[3] > 0.5).count();
    assert!(opaque > 0, "no opaque pixels");
}
