use std::path::Path;

use crate::classify::Rgba;
use crate::{Error, Result};

/// RGBA image, row-major from the top-left pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[f32; 4]>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![[0.0; 4]; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, c: Rgba) -> Self {
        Self {
            width,
            height,
            pixels: vec![c.0.map(|v| v as f32); width * height],
        }
    }

    pub fn at(&self, x: usize, y: usize) -> [f32; 4] {
        self.pixels[y * self.width + x]
    }

    pub fn rgb_mean(&self, i: usize) -> f64 {
        let p = self.pixels[i];
        (p[0] as f64 + p[1] as f64 + p[2] as f64) / 3.0
    }

    /// Binary PPM: channels clamped to `[0, 1]`, scaled to 255 and rounded;
    /// alpha is dropped.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(3 * self.pixels.len());
        for p in &self.pixels {
            for &v in &p[..3] {
                out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
        out
    }

    /// Text line `width height`, then RGBA as little-endian f32.
    pub fn to_f32_bytes(&self) -> Vec<u8> {
        let mut out = format!("{} {}\n", self.width, self.height).into_bytes();
        out.reserve(16 * self.pixels.len());
        for p in &self.pixels {
            for v in p {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_f32_bytes(bytes: &[u8]) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::format("image header line missing"))?;
        let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::format("image header is not text"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::format(format!("bad image header {header:?}")))?;
        let [width, height] = dims[..] else {
            return Err(Error::format(format!("image header needs `width height`, got {header:?}")));
        };
        let body = &bytes[nl + 1..];
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(16))
            .ok_or_else(|| Error::format("image dimensions overflow"))?;
        if body.len() != expected {
            return Err(Error::format(format!(
                "image body has {} bytes, expected {expected}",
                body.len()
            )));
        }
        let pixels = body
            .chunks_exact(16)
            .map(|c| std::array::from_fn(|k| f32::from_le_bytes(c[4 * k..4 * k + 4].try_into().unwrap())))
            .collect();
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn save_ppm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_ppm()).map_err(|e| Error::io(path, e))
    }

    pub fn save_f32(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_f32_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load_f32(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_f32_bytes(&bytes)
    }

    /// Reads a binary PPM written by [`Image::to_ppm`] (maxval 255, single
    /// whitespace after each header field). Alpha is set to one.
    pub fn from_ppm(bytes: &[u8]) -> Result<Self> {
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::format("truncated PPM header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| Error::format("bad PPM header"))?);
        }
        if fields[0] != "P6" || fields[3] != "255" {
            return Err(Error::format("only 8-bit P6 pixmaps are supported"));
        }
        let width: usize = fields[1].parse().map_err(|_| Error::format("bad PPM width"))?;
        let height: usize = fields[2].parse().map_err(|_| Error::format("bad PPM height"))?;
        let body = &bytes[(pos + 1).min(bytes.len())..];
        if body.len() != 3 * width * height {
            return Err(Error::format("PPM body size does not match its header"));
        }
        let pixels = body
            .chunks_exact(3)
            .map(|c| [c[0] as f32 / 255.0, c[1] as f32 / 255.0, c[2] as f32 / 255.0, 1.0])
            .collect();
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Loads either format, by extension: `.ppm` or the f32 sidecar.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ppm")) {
            Self::from_ppm(&bytes)
        } else {
            Self::from_f32_bytes(&bytes)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_pixel_ppm() {
        let img = Image::filled(1, 1, Rgba::splat(1.0));
        assert_eq!(img.to_ppm(), b"P6\n1 1\n255\n\xff\xff\xff".to_vec());
    }

    #[test]
    fn gradient_golden_bytes() {
        let mut img = Image::new(2, 2);
        img.pixels = vec![
            [0.0, 0.0, 0.0, 1.0],
            [1.0, 0.5, 0.0, 1.0],
            [0.25, 0.75, 1.0, 1.0],
            [2.0, -1.0, 0.2, 0.0],
        ];
        let mut want = b"P6\n2 2\n255\n".to_vec();
        want.extend_from_slice(&[0, 0, 0, 255, 128, 0, 64, 191, 255, 255, 0, 51]);
        assert_eq!(img.to_ppm(), want);
        let back = Image::from_ppm(&want).unwrap();
        assert_eq!(back.to_ppm(), want);
    }

    #[test]
    fn f32_round_trip_is_exact() {
        let mut img = Image::new(3, 2);
        for (i, p) in img.pixels.iter_mut().enumerate() {
            *p = [i as f32 / 7.0, 0.1, 1.0 / 3.0, 0.9];
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.f32");
        img.save_f32(&path).unwrap();
        assert_eq!(Image::load(&path).unwrap(), img);
        assert!(Image::from_f32_bytes(b"3 2\n\0\0").is_err());
    }
}
