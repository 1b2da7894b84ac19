//! Image representation, grayscale conversion, PGM I/O, and border padding.
//!
//! Intensities are stored as `f64` in `[0, 1]` rather than bytes because the
//! reconstruction solver needs a continuous field. The binary PGM format
//! (`P5`, maxval 255) is the interchange format for every image on disk.

use thiserror::Error;

/// Luminance weights applied by [`to_grayscale`] (ITU-R 601 coefficients).
pub const GRAY_WEIGHTS: [f64; 3] = [0.2989, 0.5870, 0.1140];

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image dimensions must be positive, got {height}x{width}")]
    InvalidDimensions { height: usize, width: usize },
    #[error("pixel buffer has {found} entries, expected {expected}")]
    PixelCountMismatch { expected: usize, found: usize },
    #[error("intensity {value} at index {index} is outside [0, 1]")]
    IntensityOutOfRange { index: usize, value: f64 },
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("truncated PGM payload: expected {expected} pixel bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
}

/// A grayscale image: `height * width` intensities in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self, ImageError> {
        if height == 0 || width == 0 {
            return Err(ImageError::InvalidDimensions { height, width });
        }
        if pixels.len() != height * width {
            return Err(ImageError::PixelCountMismatch {
                expected: height * width,
                found: pixels.len(),
            });
        }
        for (index, &value) in pixels.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(ImageError::IntensityOutOfRange { index, value });
            }
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    /// Constant image of the given intensity.
    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self, ImageError> {
        Self::new(height, width, vec![value; height * width])
    }

    /// Builds an image by evaluating `f(row, col)`; values are clamped to `[0, 1]`.
    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, ImageError> {
        let mut pixels = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                pixels.push(f(i, j).clamp(0.0, 1.0));
            }
        }
        Self::new(height, width, pixels)
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

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Intensity at `(row, col)`. Panics when out of bounds.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.height && col < self.width);
        self.pixels[row * self.width + col]
    }
}

/// An RGB image with 8-bit channels, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    height: usize,
    width: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(height: usize, width: usize, pixels: Vec<[u8; 3]>) -> Result<Self, ImageError> {
        if height == 0 || width == 0 {
            return Err(ImageError::InvalidDimensions { height, width });
        }
        if pixels.len() != height * width {
            return Err(ImageError::PixelCountMismatch {
                expected: height * width,
                found: pixels.len(),
            });
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }
}

/// Converts an RGB image to grayscale with the ITU-R 601 luminance weights.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let pixels = img
        .pixels
        .iter()
        .map(|&[r, g, b]| {
            let y = GRAY_WEIGHTS[0] * f64::from(r)
                + GRAY_WEIGHTS[1] * f64::from(g)
                + GRAY_WEIGHTS[2] * f64::from(b);
            (y / 255.0).clamp(0.0, 1.0)
        })
        .collect();
    GrayImage {
        height: img.height,
        width: img.width,
        pixels,
    }
}

/// Decodes a binary PGM ("P5", maxval 255). Intensity = stored byte / 255.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    let mut pos = 0usize;

    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(ImageError::MalformedHeader("missing P5 magic".into()));
    }
    pos += 2;

    let width = read_header_number(bytes, &mut pos)?;
    let height = read_header_number(bytes, &mut pos)?;
    let maxval = read_header_number(bytes, &mut pos)?;
    if maxval != 255 {
        return Err(ImageError::MalformedHeader(format!(
            "unsupported maxval {maxval}, expected 255"
        )));
    }
    if width == 0 || height == 0 {
        return Err(ImageError::MalformedHeader(format!(
            "non-positive dimensions {width}x{height}"
        )));
    }

    // Exactly one whitespace byte separates the header from the payload.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(ImageError::MalformedHeader(
                "missing whitespace before payload".into(),
            ))
        }
    }

    let expected = width * height;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(ImageError::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }

    let pixels = payload[..expected]
        .iter()
        .map(|&b| f64::from(b) / 255.0)
        .collect();
    Ok(GrayImage {
        height,
        width,
        pixels,
    })
}

/// Skips whitespace and `#` comments, then parses one decimal header field.
fn read_header_number(bytes: &[u8], pos: &mut usize) -> Result<usize, ImageError> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            _ => break,
        }
    }
    let start = *pos;
    while let Some(b) = bytes.get(*pos) {
        if b.is_ascii_digit() {
            *pos += 1;
        } else {
            break;
        }
    }
    if *pos == start {
        return Err(ImageError::MalformedHeader(
            "expected a decimal header field".into(),
        ));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| ImageError::MalformedHeader("unparseable header field".into()))
}

/// Encodes a binary PGM with maxval 255; each byte is `round(intensity * 255)`.
pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + img.pixels.len());
    out.extend_from_slice(format!("P5\n{} {}\n255\n", img.width, img.height).as_bytes());
    out.extend(img.pixels.iter().map(|&v| (v * 255.0).round() as u8));
    out
}

/// Pads an image by `margin` pixels on every side, replicating the nearest
/// interior pixel. Used as the border policy for all 3x3 stencils.
pub fn pad_replicate(img: &GrayImage, margin: usize) -> GrayImage {
    if margin == 0 {
        return img.clone();
    }
    let (h, w) = img.dimensions();
    let oh = h + 2 * margin;
    let ow = w + 2 * margin;
    let mut pixels = Vec::with_capacity(oh * ow);
    for i in 0..oh {
        let src_i = i.saturating_sub(margin).min(h - 1);
        for j in 0..ow {
            let src_j = j.saturating_sub(margin).min(w - 1);
            pixels.push(img.pixels[src_i * w + src_j]);
        }
    }
    GrayImage {
        height: oh,
        width: ow,
        pixels,
    }
}
