//! Manifest-driven comparison of voxel models against a ground-truth render.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use uqdvr_core::density::{build_distribution_volume, downsample_hixel, DEFAULT_EM_ITERATIONS};
use uqdvr_core::render::{diff_image, raycast, rmse};
use uqdvr_core::synth::{make_ensemble, NoiseKind, NoiseSpec};
use uqdvr_core::{DistributionVolume, KdeConfig, ModelSpec, RenderJob, Scheme, TransferFunction1D, VoxelModel};

use crate::{camera_for, ground_truth, save_image};

/// Example:
///
/// ```toml
/// field = "tangle"
/// dims = [64, 64, 64]
/// noise = "bimodal"
/// seed = 5
/// members = [5, 50]
/// quantiles = [2, 4, 8]
/// schemes = ["mean", "gaussian", "uniform", "quantile-mean"]
/// tf = "tangle.tf"
/// size = [256, 256]
/// out = "results"
/// ```
///
/// With `brick`, the noise-free field is downsampled into per-brick models
/// instead, and `members`, `noise` and `seed` are ignored.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub field: String,
    pub dims: [usize; 3],
    #[serde(default = "default_noise")]
    pub noise: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub members: Vec<usize>,
    #[serde(default)]
    pub quantiles: Vec<usize>,
    pub schemes: Vec<String>,
    /// Relative paths resolve against the manifest's directory.
    pub tf: PathBuf,
    pub camera: Option<String>,
    #[serde(default = "default_size")]
    pub size: [usize; 2],
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_gmm_k")]
    pub gmm_k: usize,
    pub brick: Option<[usize; 3]>,
    pub out: PathBuf,
}

fn default_noise() -> String {
    "bimodal".into()
}

fn default_size() -> [usize; 2] {
    [256, 256]
}

fn default_step() -> f64 {
    0.5
}

fn default_gmm_k() -> usize {
    4
}

/// Model behind each scheme; quantile schemes get one volume per `q`.
fn model_for(scheme: Scheme, q: usize, gmm_k: usize) -> ModelSpec {
    match scheme {
        Scheme::Mean => ModelSpec::Mean,
        Scheme::Uniform => ModelSpec::Uniform,
        Scheme::Gaussian => ModelSpec::Gaussian,
        Scheme::GmmOrdered | Scheme::GmmMc => ModelSpec::Gmm {
            k: gmm_k,
            max_iter: DEFAULT_EM_ITERATIONS,
        },
        Scheme::QuantileRange | Scheme::QuantileMean => ModelSpec::Quantile {
            qval: 1.0 / q as f64,
            kde: KdeConfig::default(),
        },
        Scheme::Tf2d | Scheme::Bivariate => unreachable!("rejected by validation"),
    }
}

fn is_quantile(s: Scheme) -> bool {
    matches!(s, Scheme::QuantileRange | Scheme::QuantileMean)
}

struct Plan {
    schemes: Vec<Scheme>,
    tf: TransferFunction1D,
    out: PathBuf,
    noise: NoiseKind,
}

fn validate(m: &ExperimentManifest, base: &Path) -> Result<Plan> {
    let schemes = m
        .schemes
        .iter()
        .map(|s| s.parse::<Scheme>())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if schemes.is_empty() {
        bail!("the manifest lists no schemes");
    }
    if let Some(s) = schemes.iter().find(|s| s.uses_tf2d()) {
        bail!("scheme {s} needs a 2D transfer function; experiments use 1D ones");
    }
    if schemes.iter().any(|&s| is_quantile(s)) && m.quantiles.is_empty() {
        bail!("quantile schemes need a non-empty `quantiles` list");
    }
    if m.brick.is_none() && m.members.is_empty() {
        bail!("`members` must list at least one ensemble size");
    }
    if m.quantiles.contains(&0) {
        bail!("quantile counts must be positive");
    }
    let tf_path = base.join(&m.tf);
    let tf = TransferFunction1D::load(&tf_path).with_context(|| format!("loading tf {}", tf_path.display()))?;
    Ok(Plan {
        schemes,
        tf,
        out: base.join(&m.out),
        noise: m.noise.parse()?,
    })
}

pub fn run(manifest_path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(manifest_path)
        .with_context(|| format!("reading {}", manifest_path.display()))?;
    let m: ExperimentManifest =
        toml::from_str(&text).with_context(|| format!("parsing {}", manifest_path.display()))?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let plan = validate(&m, base)?;
    std::fs::create_dir_all(&plan.out).with_context(|| format!("creating {}", plan.out.display()))?;

    let gt = ground_truth(&m.field, m.dims)?;
    let truth_volume = DistributionVolume::new(gt.geometry, VoxelModel::MeanField(gt.values.clone()))?;
    let camera = camera_for(m.camera.as_deref(), &truth_volume, (m.size[0], m.size[1]))?;
    let render = |v: &DistributionVolume, scheme: Scheme| {
        let job = RenderJob::new(v, scheme, camera)
            .with_tf(plan.tf.clone())
            .with_step(m.step)
            .with_seed(m.seed);
        raycast(&job)
    };
    let truth = render(&truth_volume, Scheme::Mean)?;
    save_image(&truth, &plan.out.join("truth.ppm"))?;

    let mut csv = String::from("scheme,q,M,rmse\n");
    let sizes: Vec<usize> = match m.brick {
        Some(b) => vec![b.iter().product()],
        None => m.members.clone(),
    };
    for &members in &sizes {
        let ensemble = match m.brick {
            Some(_) => None,
            None => Some(make_ensemble(&gt, &NoiseSpec::new(plan.noise, m.seed, members)?)?),
        };
        let mut volumes: BTreeMap<String, DistributionVolume> = BTreeMap::new();
        for &scheme in &plan.schemes {
            let qs: Vec<usize> = if is_quantile(scheme) { m.quantiles.clone() } else { vec![0] };
            for q in qs {
                let spec = model_for(scheme, q, m.gmm_k);
                let key = format!("{spec:?}");
                if !volumes.contains_key(&key) {
                    let v = match (&ensemble, m.brick) {
                        (Some(e), _) => build_distribution_volume(e, &spec)?,
                        (None, Some(b)) => downsample_hixel(&gt, b, &spec)?.0,
                        (None, None) => unreachable!(),
                    };
                    volumes.insert(key.clone(), v);
                }
                let img = render(&volumes[&key], scheme)
                    .with_context(|| format!("rendering {scheme} (q={q}, M={members})"))?;
                let err = rmse(&img, &truth)?;
                let name = if q > 0 {
                    format!("{scheme}_q{q}_M{members}")
                } else {
                    format!("{scheme}_M{members}")
                };
                save_image(&img, &plan.out.join(format!("{name}.ppm")))?;
                let (diff, _) = diff_image(&img, &truth, None)?;
                save_image(&diff, &plan.out.join(format!("diff_{name}.ppm")))?;
                let q_field = if q > 0 { q.to_string() } else { String::new() };
                writeln!(csv, "{scheme},{q_field},{members},{err}").unwrap();
            }
        }
    }
    let path = plan.out.join("results.csv");
    std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
