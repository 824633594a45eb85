//! Binary file formats. Everything is little-endian and x-fastest.
//!
//! `QVOL1` (quantile volumes):
//!
//! ```text
//! "QVOL1"                      5 bytes
//! nx ny nz                     3 x u32
//! spacing                      3 x f64
//! origin                       3 x f64
//! q                            u32
//! qval                         f64
//! boundaries                   nx*ny*nz*(q+1) x f32
//! ```
//!
//! `DVOL1` (every other model) shares the geometry header after a model tag
//! byte and a per-voxel arity word (`k` for mixtures, `m` for sample sets,
//! otherwise 1), followed by interleaved per-voxel f32 parameters.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::density::gmm::GmmComponent;
use crate::volume::quantile_count;
use crate::{DistributionVolume, Error, GridGeometry, Result, ScalarGrid, VoxelModel};

pub const QVOL_MAGIC: &[u8; 5] = b"QVOL1";
pub const DVOL_MAGIC: &[u8; 5] = b"DVOL1";

/// Sample encoding of raw volume files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawEncoding {
    U8,
    U16,
    F32,
}

impl RawEncoding {
    pub fn width(self) -> usize {
        match self {
            RawEncoding::U8 => 1,
            RawEncoding::U16 => 2,
            RawEncoding::F32 => 4,
        }
    }
}

impl std::str::FromStr for RawEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u8" => Ok(RawEncoding::U8),
            "u16" => Ok(RawEncoding::U16),
            "f32" => Ok(RawEncoding::F32),
            other => Err(Error::invalid(format!("unknown raw encoding `{other}`"))),
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Loads a headerless volume. Integer encodings are normalized to [0, 1].
pub fn load_raw(path: &Path, geometry: GridGeometry, encoding: RawEncoding) -> Result<ScalarGrid> {
    let bytes = read(path)?;
    let n = geometry.voxel_count();
    let expected = (n * encoding.width()) as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            path: path.to_path_buf(),
            expected,
            found: bytes.len() as u64,
        });
    }
    let values: Vec<f64> = match encoding {
        RawEncoding::U8 => bytes.iter().map(|&b| b as f64 / 255.0).collect(),
        RawEncoding::U16 => bytes
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]) as f64 / 65535.0)
            .collect(),
        RawEncoding::F32 => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
    };
    ScalarGrid::new(geometry, values).map_err(|e| match e {
        Error::Invalid(msg) => Error::format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Writes a headerless volume; integer encodings clamp to [0, 1] and round.
pub fn save_raw(grid: &ScalarGrid, path: &Path, encoding: RawEncoding) -> Result<()> {
    let mut bytes = Vec::with_capacity(grid.values.len() * encoding.width());
    for &v in &grid.values {
        match encoding {
            RawEncoding::U8 => bytes.push((v.clamp(0.0, 1.0) * 255.0).round() as u8),
            RawEncoding::U16 => bytes
                .extend_from_slice(&((v.clamp(0.0, 1.0) * 65535.0).round() as u16).to_le_bytes()),
            RawEncoding::F32 => bytes.extend_from_slice(&(v as f32).to_le_bytes()),
        }
    }
    write(path, &bytes)
}

fn put_geometry(out: &mut Vec<u8>, g: &GridGeometry) {
    for d in g.dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for s in g.spacing {
        out.extend_from_slice(&s.to_le_bytes());
    }
    for o in g.origin {
        out.extend_from_slice(&o.to_le_bytes());
    }
}

fn put_f32s(out: &mut Vec<u8>, values: impl IntoIterator<Item = f64>) {
    for v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::format("truncated header")),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn geometry(&mut self) -> Result<GridGeometry> {
        let dims = [self.u32()? as usize, self.u32()? as usize, self.u32()? as usize];
        let spacing = [self.f64()?, self.f64()?, self.f64()?];
        let origin = [self.f64()?, self.f64()?, self.f64()?];
        GridGeometry::new(dims, spacing, origin).map_err(|e| Error::format(e.to_string()))
    }

    /// Remaining payload as f64, requiring exactly `count` f32 values.
    fn payload(&mut self, count: usize) -> Result<Vec<f64>> {
        let rest = &self.bytes[self.pos..];
        let expected = count.checked_mul(4).ok_or_else(|| Error::format("payload size overflow"))?;
        if rest.len() != expected {
            return Err(Error::format(format!(
                "payload is {} bytes, expected {expected}",
                rest.len()
            )));
        }
        self.pos = self.bytes.len();
        Ok(rest
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect())
    }
}

/// Size in bytes of a `QVOL1` file for the given grid and quantile count.
pub fn qvol_file_size(dims: [usize; 3], q: usize) -> usize {
    QVOL_MAGIC.len() + 3 * 4 + 6 * 8 + 4 + 8 + dims.iter().product::<usize>() * (q + 1) * 4
}

pub fn save_qvol(volume: &DistributionVolume, path: &Path) -> Result<()> {
    let VoxelModel::Quantile { qval, boundaries } = volume.model() else {
        return Err(Error::invalid(format!(
            "QVOL1 stores quantile volumes, not {}",
            volume.model().name()
        )));
    };
    let q = quantile_count(*qval)?;
    let mut out = Vec::with_capacity(qvol_file_size(volume.dims(), q));
    out.extend_from_slice(QVOL_MAGIC);
    put_geometry(&mut out, &volume.geometry);
    out.extend_from_slice(&(q as u32).to_le_bytes());
    out.extend_from_slice(&qval.to_le_bytes());
    put_f32s(&mut out, boundaries.iter().copied());
    write(path, &out)
}

pub fn load_qvol(path: &Path) -> Result<DistributionVolume> {
    let bytes = read(path)?;
    decode_qvol(&bytes).map_err(|e| annotate(path, e))
}

fn annotate(path: &Path, e: Error) -> Error {
    match e {
        Error::Format(msg) => Error::format(format!("{}: {msg}", path.display())),
        Error::Invalid(msg) => Error::format(format!("{}: {msg}", path.display())),
        other => other,
    }
}

pub fn decode_qvol(bytes: &[u8]) -> Result<DistributionVolume> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(5).map_err(|_| Error::format("bad magic"))? != QVOL_MAGIC {
        return Err(Error::format("bad magic, expected QVOL1"));
    }
    let geometry = c.geometry()?;
    let q = c.u32()? as usize;
    let qval = c.f64()?;
    if q == 0 || (q as f64 * qval - 1.0).abs() > 1e-9 {
        return Err(Error::format(format!("q = {q} and qval = {qval} violate q * qval = 1")));
    }
    let boundaries = c.payload(geometry.voxel_count() * (q + 1))?;
    DistributionVolume::new(geometry, VoxelModel::Quantile { qval, boundaries })
}

fn model_tag(model: &VoxelModel) -> (u8, usize) {
    match model {
        VoxelModel::MeanField(_) => (0, 1),
        VoxelModel::Uniform { .. } => (1, 1),
        VoxelModel::Gaussian { .. } => (2, 1),
        VoxelModel::Gmm { k, .. } => (3, *k),
        VoxelModel::Samples { m, .. } => (4, *m),
        VoxelModel::Quantile { .. } => unreachable!("quantile volumes use QVOL1"),
    }
}

/// Writes any volume: quantile volumes as `QVOL1`, the rest as `DVOL1`.
pub fn save_volume(volume: &DistributionVolume, path: &Path) -> Result<()> {
    let model = volume.model();
    if matches!(model, VoxelModel::Quantile { .. }) {
        return save_qvol(volume, path);
    }
    let (tag, arity) = model_tag(model);
    let mut out = Vec::new();
    out.extend_from_slice(DVOL_MAGIC);
    out.push(tag);
    put_geometry(&mut out, &volume.geometry);
    out.extend_from_slice(&(arity as u32).to_le_bytes());
    match model {
        VoxelModel::MeanField(v) => put_f32s(&mut out, v.iter().copied()),
        VoxelModel::Uniform { center: a, width: b } | VoxelModel::Gaussian { mean: a, sigma: b } => {
            put_f32s(&mut out, a.iter().zip(b).flat_map(|(&x, &y)| [x, y]))
        }
        VoxelModel::Gmm { components, .. } => put_f32s(
            &mut out,
            components.iter().flat_map(|c| [c.weight, c.mean, c.sigma]),
        ),
        VoxelModel::Samples { samples, .. } => put_f32s(&mut out, samples.iter().copied()),
        VoxelModel::Quantile { .. } => unreachable!(),
    }
    write(path, &out)
}

/// Loads either format, dispatching on the magic.
pub fn load_volume(path: &Path) -> Result<DistributionVolume> {
    let bytes = read(path)?;
    decode_volume(&bytes).map_err(|e| annotate(path, e))
}

pub fn decode_volume(bytes: &[u8]) -> Result<DistributionVolume> {
    if bytes.starts_with(QVOL_MAGIC) {
        return decode_qvol(bytes);
    }
    if !bytes.starts_with(DVOL_MAGIC) {
        return Err(Error::format("bad magic, expected QVOL1 or DVOL1"));
    }
    let mut c = Cursor { bytes, pos: 5 };
    let tag = c.take(1)?[0];
    let geometry = c.geometry()?;
    let arity = c.u32()? as usize;
    let n = geometry.voxel_count();
    let pairs = |v: Vec<f64>| -> (Vec<f64>, Vec<f64>) {
        v.chunks_exact(2).map(|p| (p[0], p[1])).unzip()
    };
    let model = match tag {
        0 => VoxelModel::MeanField(c.payload(n)?),
        1 => {
            let (center, width) = pairs(c.payload(2 * n)?);
            VoxelModel::Uniform { center, width }
        }
        2 => {
            let (mean, sigma) = pairs(c.payload(2 * n)?);
            VoxelModel::Gaussian { mean, sigma }
        }
        3 => {
            let raw = c.payload(3 * n * arity)?;
            let mut components: Vec<GmmComponent> = raw
                .chunks_exact(3)
                .map(|p| GmmComponent::new(p[0], p[1], p[2]))
                .collect();
            // f32 storage perturbs the weight sum; restore it exactly
            for chunk in components.chunks_mut(arity.max(1)) {
                let total: f64 = chunk.iter().map(|g| g.weight).sum();
                if total > 0.0 {
                    chunk.iter_mut().for_each(|g| g.weight /= total);
                }
            }
            VoxelModel::Gmm {
                k: arity,
                components,
            }
        }
        4 => VoxelModel::Samples {
            m: arity,
            samples: c.payload(n * arity)?,
        },
        other => return Err(Error::format(format!("unknown model tag {other}"))),
    };
    DistributionVolume::new(geometry, model)
}
