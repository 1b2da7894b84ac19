//! Reconstruction-quality measures.

use thiserror::Error;

use crate::imaging::GrayImage;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("images are {a_h}x{a_w} and {b_h}x{b_w}")]
    DimensionMismatch {
        a_h: usize,
        a_w: usize,
        b_h: usize,
        b_w: usize,
    },
}

/// Mean squared error over all pixels.
pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64, MetricsError> {
    if a.dimensions() != b.dimensions() {
        return Err(MetricsError::DimensionMismatch {
            a_h: a.height(),
            a_w: a.width(),
            b_h: b.height(),
            b_w: b.width(),
        });
    }
    let sum: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.pixels().len() as f64)
}

/// Peak signal-to-noise ratio in dB for unit-range intensities:
/// `10 log10(1 / MSE)`. Identical images give `f64::INFINITY`.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64, MetricsError> {
    let m = mse(a, b)?;
    if m == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(10.0 * (1.0 / m).log10())
    }
}
