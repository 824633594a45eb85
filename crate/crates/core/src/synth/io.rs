//! Ensembles on disk: one raw f32 file per member plus a TOML manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::format::{load_raw, save_raw, RawEncoding};
use crate::volume::{EnsembleVolume, GridGeometry};
use crate::{Error, Result};

pub const MANIFEST_NAME: &str = "ensemble.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub members: usize,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    pub seed: u64,
    /// Field and noise descriptions, free text.
    pub field: String,
    pub noise: String,
    /// Member files relative to the manifest.
    pub files: Vec<String>,
}

impl EnsembleManifest {
    pub fn geometry(&self) -> Result<GridGeometry> {
        GridGeometry::new(self.dims, self.spacing, self.origin)
    }
}

/// Writes `dir/member_000.raw`, ... and `dir/ensemble.toml`. Values are
/// stored as f32.
pub fn write_ensemble(
    dir: &Path,
    ensemble: &EnsembleVolume,
    field: &str,
    noise: &str,
    seed: u64,
) -> Result<EnsembleManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let g = ensemble.geometry;
    let files: Vec<String> = (0..ensemble.member_count())
        .map(|m| format!("member_{m:03}.raw"))
        .collect();
    for (m, name) in files.iter().enumerate() {
        save_raw(&ensemble.member(m), &dir.join(name), RawEncoding::F32)?;
    }
    let manifest = EnsembleManifest {
        members: files.len(),
        dims: g.dims,
        spacing: g.spacing,
        origin: g.origin,
        seed,
        field: field.to_owned(),
        noise: noise.to_owned(),
        files,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::format(e.to_string()))?;
    let path = dir.join(MANIFEST_NAME);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Reads an ensemble from its manifest, or from a directory holding one.
pub fn read_ensemble(path: &Path) -> Result<(EnsembleVolume, EnsembleManifest)> {
    let manifest_path = if path.is_dir() { path.join(MANIFEST_NAME) } else { path.to_path_buf() };
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: EnsembleManifest =
        toml::from_str(&text).map_err(|e| Error::format(format!("{}: {e}", manifest_path.display())))?;
    if manifest.files.len() != manifest.members {
        return Err(Error::format(format!(
            "{}: lists {} files for {} members",
            manifest_path.display(),
            manifest.files.len(),
            manifest.members
        )));
    }
    let geometry = manifest.geometry()?;
    let members = manifest
        .files
        .iter()
        .map(|f| load_raw(&dir.join(f), geometry, RawEncoding::F32))
        .collect::<Result<Vec<_>>>()?;
    Ok((EnsembleVolume::new(members)?, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{make_ensemble, sample_field, Field, NoiseKind, NoiseSpec};

    #[test]
    fn round_trip() {
        let gt = sample_field(&Field::Tangle, [5, 4, 3], None).unwrap();
        let spec = NoiseSpec::new(NoiseKind::bimodal(), 9, 4).unwrap();
        let e = make_ensemble(&gt, &spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let written = write_ensemble(dir.path(), &e, "tangle", &spec.kind.to_string(), 9).unwrap();
        let (back, manifest) = read_ensemble(dir.path()).unwrap();
        assert_eq!(manifest, written);
        assert_eq!(back.member_count(), 4);
        assert_eq!(back.geometry, e.geometry);
        for m in 0..4 {
            for (a, b) in back.member_values(m).iter().zip(e.member_values(m)) {
                assert_eq!(*a, *b as f32 as f64);
            }
        }
    }

    #[test]
    fn missing_member_file() {
        let gt = sample_field(&Field::Constant(1.0), [2, 2, 2], None).unwrap();
        let e = make_ensemble(&gt, &NoiseSpec::new(NoiseKind::Gaussian { sigma: 0.0 }, 0, 2).unwrap()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_ensemble(dir.path(), &e, "constant:1", "gaussian:0", 0).unwrap();
        std::fs::remove_file(dir.path().join("member_001.raw")).unwrap();
        assert!(read_ensemble(dir.path()).is_err());
    }
}
