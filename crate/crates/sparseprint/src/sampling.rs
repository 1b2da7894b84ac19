//! Pixel-domain measurement model: random masks and the forward/adjoint
//! measurement operator.
//!
//! A mask keeps `round(fraction * H * W)` pixels, chosen uniformly without
//! replacement by a seeded generator, so every experiment is reproducible
//! from `(dims, fraction, seed)` alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid_text::{self, GridParseError};
use crate::imaging::GrayImage;

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("available fraction {0} is outside [0, 1]")]
    FractionOutOfRange(f64),
    #[error("mask dimensions must be positive, got {height}x{width}")]
    InvalidDimensions { height: usize, width: usize },
    #[error("kept buffer has {found} entries, expected {expected}")]
    KeptCountMismatch { expected: usize, found: usize },
    #[error("image is {img_h}x{img_w} but mask is {mask_h}x{mask_w}")]
    DimensionMismatch {
        img_h: usize,
        img_w: usize,
        mask_h: usize,
        mask_w: usize,
    },
    #[error("mask file: {0}")]
    Grid(#[from] GridParseError),
    #[error("mask file header is inconsistent with its grid: {0}")]
    InconsistentMaskFile(String),
}

/// Boolean grid marking which pixels were measured, plus the seed that
/// generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelMask {
    height: usize,
    width: usize,
    kept: Vec<bool>,
    seed: u64,
}

impl PixelMask {
    pub fn new(height: usize, width: usize, kept: Vec<bool>, seed: u64) -> Result<Self, SamplingError> {
        if height == 0 || width == 0 {
            return Err(SamplingError::InvalidDimensions { height, width });
        }
        if kept.len() != height * width {
            return Err(SamplingError::KeptCountMismatch {
                expected: height * width,
                found: kept.len(),
            });
        }
        Ok(Self {
            height,
            width,
            kept,
            seed,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kept(&self) -> &[bool] {
        &self.kept
    }

    pub fn is_kept(&self, row: usize, col: usize) -> bool {
        assert!(row < self.height && col < self.width);
        self.kept[row * self.width + col]
    }

    pub fn kept_count(&self) -> usize {
        self.kept.iter().filter(|&&k| k).count()
    }

    pub fn available_fraction(&self) -> f64 {
        self.kept_count() as f64 / (self.height * self.width) as f64
    }
}

/// Generates a mask keeping exactly `round(available_fraction * H * W)`
/// pixels, chosen uniformly without replacement. Deterministic in the seed.
pub fn random_mask(
    height: usize,
    width: usize,
    available_fraction: f64,
    seed: u64,
) -> Result<PixelMask, SamplingError> {
    if !(0.0..=1.0).contains(&available_fraction) {
        return Err(SamplingError::FractionOutOfRange(available_fraction));
    }
    if height == 0 || width == 0 {
        return Err(SamplingError::InvalidDimensions { height, width });
    }
    let total = height * width;
    let count = (available_fraction * total as f64).round() as usize;
    let mut kept = vec![false; total];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for idx in rand::seq::index::sample(&mut rng, total, count) {
        kept[idx] = true;
    }
    Ok(PixelMask {
        height,
        width,
        kept,
        seed,
    })
}

/// The measured intensities of one image under one mask, in row-major
/// kept order.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    mask: PixelMask,
    values: Vec<f64>,
}

impl MeasurementSet {
    pub fn mask(&self) -> &PixelMask {
        &self.mask
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Samples the image at the mask's kept positions.
pub fn measure(img: &GrayImage, mask: &PixelMask) -> Result<MeasurementSet, SamplingError> {
    if img.dimensions() != mask.dimensions() {
        return Err(SamplingError::DimensionMismatch {
            img_h: img.height(),
            img_w: img.width(),
            mask_h: mask.height,
            mask_w: mask.width,
        });
    }
    let values = img
        .pixels()
        .iter()
        .zip(&mask.kept)
        .filter_map(|(&v, &k)| k.then_some(v))
        .collect();
    Ok(MeasurementSet {
        mask: mask.clone(),
        values,
    })
}

/// Places the measured values back on the pixel grid, writing `fill` at
/// every unmeasured position. `fill` is clamped to `[0, 1]`.
pub fn embed(ms: &MeasurementSet, fill: f64) -> GrayImage {
    let fill = fill.clamp(0.0, 1.0);
    let mask = &ms.mask;
    let mut pixels = vec![fill; mask.height * mask.width];
    let mut vi = 0usize;
    for (i, &k) in mask.kept.iter().enumerate() {
        if k {
            pixels[i] = ms.values[vi];
            vi += 1;
        }
    }
    GrayImage::new(mask.height, mask.width, pixels)
        .expect("mask dimensions are positive and measured values are intensities")
}

/// Serializes a mask to the `MASK <H> <W> <seed> <fraction>` text format.
pub fn write_mask(mask: &PixelMask) -> String {
    let extra = vec![mask.seed.to_string(), mask.available_fraction().to_string()];
    grid_text::encode("MASK", mask.height, mask.width, &extra, &mask.kept)
}

/// Parses the `MASK` text format. The header's fraction is checked against
/// the grid's realized keep count.
pub fn read_mask(text: &str) -> Result<PixelMask, SamplingError> {
    let grid = grid_text::decode(text, "MASK")?;
    if grid.extra.len() != 2 {
        return Err(SamplingError::Grid(GridParseError::BadField(format!(
            "expected 2 header fields after dimensions, found {}",
            grid.extra.len()
        ))));
    }
    let seed: u64 = grid.extra[0]
        .parse()
        .map_err(|_| GridParseError::BadField(format!("seed {:?}", grid.extra[0])))?;
    let fraction: f64 = grid.extra[1]
        .parse()
        .map_err(|_| GridParseError::BadField(format!("fraction {:?}", grid.extra[1])))?;

    let mask = PixelMask::new(grid.height, grid.width, grid.cells, seed)?;
    let declared = (fraction * (grid.height * grid.width) as f64).round() as usize;
    if declared != mask.kept_count() {
        return Err(SamplingError::InconsistentMaskFile(format!(
            "header fraction {fraction} implies {declared} kept pixels, grid has {}",
            mask.kept_count()
        )));
    }
    Ok(mask)
}
