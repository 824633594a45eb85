//! `uqdvr`: generate uncertain volumes, fit per-voxel models, render and
//! compare images.

mod experiment;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use uqdvr_core::density::{build_distribution_volume, downsample_hixel, Bandwidth, DEFAULT_EM_ITERATIONS};
use uqdvr_core::format::{load_raw, load_volume, save_volume, RawEncoding};
use uqdvr_core::render::{diff_image, raycast, render_quartile_views};
use uqdvr_core::synth::{make_bivariate, make_ensemble, read_ensemble, sample_field, write_ensemble, Field, NoiseKind, NoiseSpec};
use uqdvr_core::{
    Camera, DistributionVolume, GridGeometry, Image, KdeConfig, ModelSpec, RenderJob, Rgba, ScalarGrid, Scheme,
    TransferFunction1D, TransferFunction2D, VoxelModel,
};

#[derive(Parser)]
#[command(name = "uqdvr", version, about = "Direct volume rendering of uncertain scalar fields")]
struct Cli {
    /// Worker threads; output does not depend on this.
    #[arg(long, global = true, env = "UQDVR_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic field and write a noisy ensemble.
    Gen(GenArgs),
    /// Fit a per-voxel distribution model to an ensemble or brick a volume.
    Estimate(EstimateArgs),
    /// Render a distribution volume.
    Render(RenderArgs),
    /// Render the lower-quartile, middle-half and upper-quartile views.
    Quartiles(QuartileArgs),
    /// Difference image of two renders; prints `rmse=<value>`.
    Diff(DiffArgs),
    /// Run a full experiment described by a TOML manifest.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenArgs {
    /// tangle, teardrop, nested-spheres, linear:a,b,c, constant:c,
    /// bivariate:1 or bivariate:2.
    #[arg(long)]
    field: String,
    /// Grid size, `N` or `NX,NY,NZ`.
    #[arg(long, value_parser = parse_dims)]
    dims: [usize; 3],
    #[arg(long, default_value_t = 50)]
    members: usize,
    /// gaussian:sigma, uniform:width, bimodal or
    /// bimodal:p_main,main_sigma,offset,outlier_sigma.
    #[arg(long, default_value = "bimodal")]
    noise: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// Ensemble directory or manifest; with --brick, a mean-field volume
    /// file or a raw volume (then --dims is required).
    #[arg(long)]
    input: PathBuf,
    /// mean, uniform, gaussian, gmm, quantile or samples.
    #[arg(long)]
    model: String,
    /// Quantile value of the quantile model, e.g. 0.125 for eight pieces.
    #[arg(long)]
    qval: Option<f64>,
    /// Components of the gmm model.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// EM iteration cap of the gmm model.
    #[arg(long, default_value_t = DEFAULT_EM_ITERATIONS)]
    iterations: usize,
    /// KDE bandwidth of the quantile model: `auto` or a positive number.
    #[arg(long, default_value = "auto")]
    bandwidth: String,
    /// KDE lattice size of the quantile model.
    #[arg(long, default_value_t = 512)]
    lattice: usize,
    /// Brick size for hixel downsampling, `B` or `BX,BY,BZ`.
    #[arg(long, value_parser = parse_dims)]
    brick: Option<[usize; 3]>,
    /// Dimensions of a raw --input volume.
    #[arg(long, value_parser = parse_dims)]
    dims: Option<[usize; 3]>,
    /// Sample encoding of a raw --input volume: u8, u16 or f32.
    #[arg(long, default_value = "f32")]
    encoding: String,
    /// Output volume file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct ViewArgs {
    /// Distribution volume file.
    #[arg(long)]
    input: PathBuf,
    /// 1D transfer function file (`x r g b a` lines).
    #[arg(long)]
    tf: Option<PathBuf>,
    /// `ex,ey,ez,ax,ay,az,ux,uy,uz,fov`; default frames the volume.
    #[arg(long)]
    camera: Option<String>,
    /// Image size `WxH`.
    #[arg(long, default_value = "256x256", value_parser = parse_size)]
    size: (usize, usize),
    /// Sample distance in units of the smallest voxel spacing.
    #[arg(long, default_value_t = 0.5)]
    step: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Background `r,g,b,a`.
    #[arg(long, default_value = "0,0,0,1", value_parser = parse_rgba)]
    background: Rgba,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    view: ViewArgs,
    /// mean, uniform, gaussian, gmm-ordered, gmm-mc, quantile-range,
    /// quantile-mean, tf2d or bivariate.
    #[arg(long)]
    scheme: String,
    /// 2D transfer function file, for tf2d and bivariate.
    #[arg(long)]
    tf2d: Option<PathBuf>,
    /// Second field of the bivariate scheme.
    #[arg(long)]
    secondary: Option<PathBuf>,
    /// Output `.ppm`; a float `.f32` copy is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct QuartileArgs {
    #[command(flatten)]
    view: ViewArgs,
    /// Output prefix; writes `<prefix>_lower`, `_middle` and `_upper`
    /// `.ppm` and `.f32` files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DiffArgs {
    /// Image to compare (`.ppm` or `.f32`).
    image: PathBuf,
    /// Reference image.
    reference: PathBuf,
    /// Difference that saturates the color map; default is the largest.
    #[arg(long)]
    range: Option<f64>,
    /// Output `.ppm` of the difference image.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment manifest (TOML).
    manifest: PathBuf,
}

fn parse_dims(s: &str) -> std::result::Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format!("{s:?}: {e}"))?;
    match v[..] {
        [n] => Ok([n; 3]),
        [x, y, z] => Ok([x, y, z]),
        _ => Err(format!("expected N or NX,NY,NZ, got {s:?}")),
    }
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let w = w.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    let h = h.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    Ok((w, h))
}

fn parse_rgba(s: &str) -> std::result::Result<Rgba, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format!("{s:?}: {e}"))?;
    match v[..] {
        [r, g, b, a] => Ok(Rgba::new(r, g, b, a)),
        _ => Err(format!("expected r,g,b,a, got {s:?}")),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Render(a) => cmd_render(a),
        Command::Quartiles(a) => cmd_quartiles(a),
        Command::Diff(a) => cmd_diff(a),
        Command::Experiment(a) => experiment::run(&a.manifest),
    }
}

/// Ground truth of a field name, including the two bivariate components.
pub(crate) fn ground_truth(field: &str, dims: [usize; 3]) -> Result<ScalarGrid> {
    match field {
        "bivariate:1" => Ok(make_bivariate(dims)?.0),
        "bivariate:2" => Ok(make_bivariate(dims)?.1),
        _ => Ok(sample_field(&field.parse::<Field>()?, dims, None)?),
    }
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let gt = ground_truth(&a.field, a.dims)?;
    let kind: NoiseKind = a.noise.parse()?;
    let spec = NoiseSpec::new(kind, a.seed, a.members)?;
    let ensemble = make_ensemble(&gt, &spec)?;
    write_ensemble(&a.out, &ensemble, &a.field, &kind.to_string(), a.seed)?;
    let truth = DistributionVolume::new(gt.geometry, VoxelModel::MeanField(gt.values))?;
    save_volume(&truth, &a.out.join("ground_truth.dvol"))?;
    Ok(())
}

pub(crate) fn model_spec(
    model: &str,
    qval: Option<f64>,
    k: usize,
    iterations: usize,
    kde: KdeConfig,
) -> Result<ModelSpec> {
    Ok(match model {
        "mean" => ModelSpec::Mean,
        "uniform" => ModelSpec::Uniform,
        "gaussian" => ModelSpec::Gaussian,
        "gmm" => ModelSpec::Gmm { k, max_iter: iterations },
        "quantile" => ModelSpec::Quantile {
            qval: qval.context("the quantile model needs --qval")?,
            kde,
        },
        "samples" => ModelSpec::Samples,
        other => bail!("unknown model {other:?}; expected mean, uniform, gaussian, gmm, quantile or samples"),
    })
}

fn load_scalar(input: &Path, dims: Option<[usize; 3]>, encoding: &str) -> Result<ScalarGrid> {
    if let Some(dims) = dims {
        let encoding: RawEncoding = encoding.parse()?;
        return Ok(load_raw(input, GridGeometry::unit(dims), encoding)?);
    }
    let volume = load_volume(input)?;
    let geometry = volume.geometry;
    match volume.into_model() {
        VoxelModel::MeanField(values) => Ok(ScalarGrid::new(geometry, values)?),
        other => bail!(
            "{} holds a {} volume; bricking needs a scalar volume",
            input.display(),
            other.name()
        ),
    }
}

fn cmd_estimate(a: EstimateArgs) -> Result<()> {
    let bandwidth = match a.bandwidth.as_str() {
        "auto" => Bandwidth::Auto,
        h => Bandwidth::Fixed(h.parse().with_context(|| format!("bad --bandwidth {h:?}"))?),
    };
    let kde = KdeConfig {
        bandwidth,
        lattice: a.lattice,
    };
    if a.qval.is_some() && a.model != "quantile" {
        bail!("--qval only applies to the quantile model");
    }
    let spec = model_spec(&a.model, a.qval, a.k, a.iterations, kde)?;
    let volume = match a.brick {
        Some(brick) => {
            let grid = load_scalar(&a.input, a.dims, &a.encoding)?;
            downsample_hixel(&grid, brick, &spec)?.0
        }
        None => {
            if a.dims.is_some() {
                bail!("--dims only applies to raw input with --brick");
            }
            let (ensemble, _) = read_ensemble(&a.input)?;
            build_distribution_volume(&ensemble, &spec)?
        }
    };
    save_volume(&volume, &a.out)?;
    Ok(())
}

pub(crate) fn camera_for(spec: Option<&str>, volume: &DistributionVolume, size: (usize, usize)) -> Result<Camera> {
    let cam = match spec {
        Some(s) => s.parse::<Camera>()?.with_size(size.0, size.1)?,
        None => {
            let (lo, hi) = volume.geometry.bounds();
            Camera::framing(lo, hi, size.0, size.1)?
        }
    };
    Ok(cam)
}

/// Writes `path` as PPM and the float image next to it with extension `f32`.
pub(crate) fn save_image(img: &Image, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    img.save_ppm(path)?;
    img.save_f32(&path.with_extension("f32"))?;
    Ok(())
}

fn build_job<'a>(view: &ViewArgs, volume: &'a DistributionVolume, scheme: Scheme) -> Result<RenderJob<'a>> {
    let camera = camera_for(view.camera.as_deref(), volume, view.size)?;
    let mut job = RenderJob::new(volume, scheme, camera)
        .with_step(view.step)
        .with_seed(view.seed)
        .with_background(view.background);
    if let Some(tf) = &view.tf {
        job = job.with_tf(TransferFunction1D::load(tf)?);
    }
    Ok(job)
}

fn cmd_render(a: RenderArgs) -> Result<()> {
    let scheme: Scheme = a.scheme.parse()?;
    let volume = load_volume(&a.view.input)?;
    let secondary = a.secondary.as_deref().map(load_volume).transpose()?;
    let mut job = build_job(&a.view, &volume, scheme)?;
    if scheme.uses_tf2d() {
        let path = a.tf2d.as_deref().with_context(|| format!("scheme {scheme} needs --tf2d"))?;
        job = job.with_tf2d(TransferFunction2D::load(path)?);
    } else if job.tf.is_none() {
        bail!("scheme {scheme} needs --tf");
    }
    if let Some(s) = &secondary {
        if scheme != Scheme::Bivariate {
            bail!("--secondary only applies to the bivariate scheme");
        }
        job = job.with_secondary(s);
    }
    let img = raycast(&job)?;
    save_image(&img, &a.out)
}

fn cmd_quartiles(a: QuartileArgs) -> Result<()> {
    let volume = load_volume(&a.view.input)?;
    let job = build_job(&a.view, &volume, Scheme::QuantileRange)?;
    if job.tf.is_none() {
        bail!("quartile views need --tf");
    }
    let views = render_quartile_views(&job)?;
    let stem = a.out.file_name().context("--out needs a file name prefix")?.to_string_lossy().into_owned();
    for (img, part) in views.iter().zip(["lower", "middle", "upper"]) {
        save_image(img, &a.out.with_file_name(format!("{stem}_{part}.ppm")))?;
    }
    Ok(())
}

fn cmd_diff(a: DiffArgs) -> Result<()> {
    let img = Image::load(&a.image)?;
    let reference = Image::load(&a.reference)?;
    let (diff, err) = diff_image(&img, &reference, a.range)?;
    if let Some(out) = &a.out {
        save_image(&diff, out)?;
    }
    println!("rmse={err}");
    Ok(())
}
