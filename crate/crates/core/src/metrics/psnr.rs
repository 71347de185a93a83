use super::MetricsError;
use crate::image::ImageBuffer;

/// Peak signal-to-noise ratio in dB over raw samples on a `[0, max_i]`
/// scale. Identical inputs give `f64::INFINITY`.
pub fn psnr_values(x: &[f64], y: &[f64], max_i: f64) -> Result<f64, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::Length(x.len(), y.len()));
    }
    if !(max_i > 0.0) {
        return Err(MetricsError::MaxValue(max_i));
    }
    if x.is_empty() {
        return Ok(f64::INFINITY);
    }
    let mse = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (max_i * max_i / mse).log10())
}

/// PSNR of two images whose samples lie in `[0, 1]`; pass `max_i = 1`
/// unless the images were rescaled.
pub fn psnr(x: &ImageBuffer, y: &ImageBuffer, max_i: f64) -> Result<f64, MetricsError> {
    x.same_shape(y)?;
    psnr_values(x.data(), y.data(), max_i)
}
