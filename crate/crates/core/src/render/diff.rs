use crate::classify::Rgba;
use crate::render::image::Image;
use crate::{Error, Result};

const BLUE: Rgba = Rgba::new(0.0, 0.25, 1.0, 1.0);
const WHITE: Rgba = Rgba::new(1.0, 1.0, 1.0, 1.0);
const YELLOW: Rgba = Rgba::new(1.0, 0.85, 0.0, 1.0);

fn check_congruent(a: &Image, b: &Image) -> Result<()> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::invalid(format!(
            "image sizes differ: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

/// Root mean square of the per-pixel difference of RGB means.
pub fn rmse(img: &Image, reference: &Image) -> Result<f64> {
    check_congruent(img, reference)?;
    let n = img.pixels.len();
    let sum: f64 = (0..n).map(|i| (img.rgb_mean(i) - reference.rgb_mean(i)).powi(2)).sum();
    Ok((sum / n as f64).sqrt())
}

/// Difference image and RMSE.
///
/// The signed difference of RGB means is shown blue (negative), white (zero)
/// and yellow (positive), saturating at `range`; without a range the largest
/// absolute difference is used.
pub fn diff_image(img: &Image, reference: &Image, range: Option<f64>) -> Result<(Image, f64)> {
    let err = rmse(img, reference)?;
    let signed: Vec<f64> = (0..img.pixels.len())
        .map(|i| img.rgb_mean(i) - reference.rgb_mean(i))
        .collect();
    let scale = range.unwrap_or_else(|| signed.iter().fold(0.0, |m, d| f64::max(m, d.abs())));
    let mut out = Image::new(img.width, img.height);
    for (p, &d) in out.pixels.iter_mut().zip(&signed) {
        let t = if scale > 0.0 { (d / scale).clamp(-1.0, 1.0) } else { 0.0 };
        let c = if t < 0.0 { WHITE.lerp(BLUE, -t) } else { WHITE.lerp(YELLOW, t) };
        *p = c.0.map(|v| v as f32);
    }
    Ok((out, err))
}
