use std::str::FromStr;

use crate::{Error, Result};

pub type Vec3 = [f64; 3];

#[inline]
pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
fn normalize(a: Vec3) -> Vec3 {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Pinhole camera with a vertical field of view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub eye: Vec3,
    pub at: Vec3,
    pub up: Vec3,
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    pub fn new(eye: Vec3, at: Vec3, up: Vec3, fov_deg: f64, width: usize, height: usize) -> Result<Self> {
        let cam = Self {
            eye,
            at,
            up,
            fov_deg,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eye.iter().chain(&self.at).chain(&self.up).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite camera vector"));
        }
        let f = sub(self.at, self.eye);
        if dot(f, f) == 0.0 {
            return Err(Error::invalid("camera eye and look-at coincide"));
        }
        let c = cross(normalize(f), self.up);
        if dot(c, c).sqrt() < 1e-9 * dot(self.up, self.up).sqrt() || dot(self.up, self.up) == 0.0 {
            return Err(Error::invalid("camera up vector is parallel to the view direction"));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::invalid(format!("field of view {} outside (0, 180)", self.fov_deg)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("image size must be positive"));
        }
        Ok(())
    }

    pub fn with_size(mut self, width: usize, height: usize) -> Result<Self> {
        self.width = width;
        self.height = height;
        self.validate()?;
        Ok(self)
    }

    /// Looks at the center of a box from a fixed oblique direction, far
    /// enough that the whole box fits the 30 degree field of view.
    pub fn framing(lo: Vec3, hi: Vec3, width: usize, height: usize) -> Result<Self> {
        let center = std::array::from_fn(|a| 0.5 * (lo[a] + hi[a]));
        let radius = 0.5 * dot(sub(hi, lo), sub(hi, lo)).sqrt();
        let dir = normalize([1.0, 0.8, 0.6]);
        let dist = radius / (15f64.to_radians()).sin();
        let eye = std::array::from_fn(|a| center[a] + dist * dir[a]);
        Self::new(eye, center, [0.0, 0.0, 1.0], 30.0, width, height)
    }

    /// Origin and unit direction of the ray through the center of pixel
    /// `(px, py)`, counted from the top-left corner.
    pub fn ray(&self, px: usize, py: usize) -> (Vec3, Vec3) {
        let f = normalize(sub(self.at, self.eye));
        let r = normalize(cross(f, self.up));
        let u = cross(r, f);
        let th = (0.5 * self.fov_deg).to_radians().tan();
        let aspect = self.width as f64 / self.height as f64;
        let sx = (2.0 * (px as f64 + 0.5) / self.width as f64 - 1.0) * aspect * th;
        let sy = (1.0 - 2.0 * (py as f64 + 0.5) / self.height as f64) * th;
        let d = normalize(std::array::from_fn(|a| f[a] + sx * r[a] + sy * u[a]));
        (self.eye, d)
    }
}

/// `ex,ey,ez,ax,ay,az,ux,uy,uz,fov`; the image size is set separately.
impl FromStr for Camera {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::invalid(format!("camera {s:?}: {e}")))?;
        if v.len() != 10 {
            return Err(Error::invalid(format!(
                "camera needs 10 comma-separated numbers (eye, at, up, fov), got {}",
                v.len()
            )));
        }
        Camera::new([v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]], v[9], 1, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_ray_points_at_target() {
        let cam = Camera::new([0.0, 0.0, 5.0], [0.0; 3], [0.0, 1.0, 0.0], 60.0, 3, 3).unwrap();
        let (o, d) = cam.ray(1, 1);
        assert_eq!(o, [0.0, 0.0, 5.0]);
        assert!((d[2] + 1.0).abs() < 1e-15 && d[0].abs() < 1e-15 && d[1].abs() < 1e-15);
        // top-left pixel looks up and to the left
        let (_, d) = cam.ray(0, 0);
        assert!(d[0] < 0.0 && d[1] > 0.0);
    }

    #[test]
    fn invalid_cameras() {
        assert!(Camera::new([0.0; 3], [0.0; 3], [0.0, 1.0, 0.0], 60.0, 4, 4).is_err());
        assert!(Camera::new([0.0, 0.0, 1.0], [0.0; 3], [0.0, 0.0, 1.0], 60.0, 4, 4).is_err());
        assert!(Camera::new([0.0, 0.0, 1.0], [0.0; 3], [0.0, 1.0, 0.0], 180.0, 4, 4).is_err());
        assert!(Camera::new([0.0, 0.0, 1.0], [0.0; 3], [0.0, 1.0, 0.0], 60.0, 0, 4).is_err());
    }

    #[test]
    fn parse() {
        let c: Camera = "3,2,1, 0,0,0, 0,0,1, 45".parse().unwrap();
        assert_eq!(c.eye, [3.0, 2.0, 1.0]);
        assert_eq!(c.fov_deg, 45.0);
        assert!("1,2,3".parse::<Camera>().is_err());
    }
}
