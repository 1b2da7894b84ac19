//! Prewitt edge detection: smoothing, gradient computation, thresholding,
//! and non-maximum-suppression thinning.
//!
//! The gradient stencil is the 3x3 Prewitt pair with unit center weight.
//! With the neighborhood labeled
//!
//! ```text
//! k0 k1 k2
//! k7  .  k3
//! k6 k5 k4
//! ```
//!
//! the horizontal derivative is `(k2 + k3 + k4) - (k0 + k7 + k6)` (right
//! column minus left column) and the vertical derivative is
//! `(k6 + k5 + k4) - (k0 + k1 + k2)` (bottom row minus top row). Borders
//! replicate the nearest interior pixel so flat regions never respond at
//! the image edge.

use thiserror::Error;

use crate::digest::fnv1a64;
use crate::grid_text::{self, GridParseError};
use crate::imaging::{pad_replicate, GrayImage};

/// Center weight `c` of the 3x3 gradient stencil; 1 selects the Prewitt
/// operator (2 would give Sobel).
pub const PREWITT_CENTER_WEIGHT: f64 = 1.0;

/// Auto threshold is this multiple of the mean gradient magnitude.
pub const AUTO_THRESHOLD_FACTOR: f64 = 4.0;

/// Default Gaussian smoothing width for the pipeline's first step.
pub const DEFAULT_SIGMA: f64 = 1.0;

#[derive(Debug, Error)]
pub enum EdgeError {
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("fixed threshold must be nonnegative and finite, got {0}")]
    InvalidThreshold(f64),
    #[error("edge map is {em_h}x{em_w} but gradient field is {gf_h}x{gf_w}")]
    DimensionMismatch {
        em_h: usize,
        em_w: usize,
        gf_h: usize,
        gf_w: usize,
    },
    #[error("edge map file: {0}")]
    Grid(#[from] GridParseError),
    #[error("malformed edge parameters: {0}")]
    BadParams(String),
}

/// How the detection threshold T is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdPolicy {
    /// Use the given T directly.
    Fixed(f64),
    /// T = [`AUTO_THRESHOLD_FACTOR`] times the mean gradient magnitude.
    Auto,
}

/// The full parameter set of the detection pipeline. Galleries store one of
/// these and require probes to be detected with the same values.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeParams {
    /// Smoothing width; `None` skips the smoothing step.
    pub sigma: Option<f64>,
    pub policy: ThresholdPolicy,
    pub thin: bool,
}

impl Default for EdgeParams {
    fn default() -> Self {
        Self {
            sigma: Some(DEFAULT_SIGMA),
            policy: ThresholdPolicy::Auto,
            thin: false,
        }
    }
}

impl EdgeParams {
    /// Runs the full pipeline with these parameters.
    pub fn detect(&self, img: &GrayImage) -> Result<EdgeMap, EdgeError> {
        detect_edges(img, self.sigma, self.policy, self.thin)
    }

    /// Canonical one-line form, stable across runs; also the digest input.
    pub fn canonical_string(&self) -> String {
        let sigma = match self.sigma {
            Some(s) => s.to_string(),
            None => "none".to_string(),
        };
        let thresh = match self.policy {
            ThresholdPolicy::Auto => "auto".to_string(),
            ThresholdPolicy::Fixed(t) => format!("fixed:{t}"),
        };
        format!("sigma={sigma} thresh={thresh} thin={}", self.thin)
    }

    pub fn parse_canonical(s: &str) -> Result<Self, EdgeError> {
        let mut sigma = None;
        let mut policy = None;
        let mut thin = None;
        for field in s.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| EdgeError::BadParams(format!("field {field:?}")))?;
            match key {
                "sigma" => {
                    sigma = Some(if value == "none" {
                        None
                    } else {
                        Some(value.parse().map_err(|_| {
                            EdgeError::BadParams(format!("sigma {value:?}"))
                        })?)
                    });
                }
                "thresh" => {
                    policy = Some(if value == "auto" {
                        ThresholdPolicy::Auto
                    } else if let Some(t) = value.strip_prefix("fixed:") {
                        ThresholdPolicy::Fixed(t.parse().map_err(|_| {
                            EdgeError::BadParams(format!("threshold {t:?}"))
                        })?)
                    } else {
                        return Err(EdgeError::BadParams(format!("threshold {value:?}")));
                    });
                }
                "thin" => {
                    thin = Some(value.parse().map_err(|_| {
                        EdgeError::BadParams(format!("thin {value:?}"))
                    })?);
                }
                _ => return Err(EdgeError::BadParams(format!("unknown key {key:?}"))),
            }
        }
        match (sigma, policy, thin) {
            (Some(sigma), Some(policy), Some(thin)) => Ok(Self { sigma, policy, thin }),
            _ => Err(EdgeError::BadParams("missing field".into())),
        }
    }

    /// Stable 64-bit fingerprint of the parameter set.
    pub fn digest(&self) -> u64 {
        fnv1a64(self.canonical_string().as_bytes())
    }
}

/// Per-pixel gradients from the Prewitt stencil.
///
/// `magnitude` is the l1 form `|gx| + |gy|`; the Euclidean alternative is
/// available through [`GradientField::euclidean_magnitude`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    height: usize,
    width: usize,
    gx: Vec<f64>,
    gy: Vec<f64>,
    magnitude: Vec<f64>,
    direction: Vec<f64>,
}

impl GradientField {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn gx(&self) -> &[f64] {
        &self.gx
    }

    pub fn gy(&self) -> &[f64] {
        &self.gy
    }

    /// `|gx| + |gy|` per pixel.
    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    /// Gradient angle in (-pi, pi], 0 where both components vanish.
    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    /// The Euclidean magnitude `sqrt(gx^2 + gy^2)`, kept as an alternative
    /// measure for comparison; the pipeline thresholds the l1 magnitude.
    pub fn euclidean_magnitude(&self) -> Vec<f64> {
        self.gx
            .iter()
            .zip(&self.gy)
            .map(|(x, y)| x.hypot(*y))
            .collect()
    }
}

/// Boolean edge image plus the threshold that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    height: usize,
    width: usize,
    edges: Vec<bool>,
    threshold_used: f64,
}

impl EdgeMap {
    pub fn new(
        height: usize,
        width: usize,
        edges: Vec<bool>,
        threshold_used: f64,
    ) -> Result<Self, EdgeError> {
        if edges.len() != height * width || height == 0 || width == 0 {
            return Err(EdgeError::BadParams(format!(
                "edge grid {}x{} with {} cells",
                height,
                width,
                edges.len()
            )));
        }
        Ok(Self {
            height,
            width,
            edges,
            threshold_used,
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

    pub fn edges(&self) -> &[bool] {
        &self.edges
    }

    pub fn is_edge(&self, row: usize, col: usize) -> bool {
        assert!(row < self.height && col < self.width);
        self.edges[row * self.width + col]
    }

    pub fn threshold_used(&self) -> f64 {
        self.threshold_used
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().filter(|&&e| e).count()
    }
}

/// Convolves with a normalized, truncated Gaussian (radius `ceil(3 sigma)`),
/// replicate-padded. Constant images pass through unchanged.
pub fn gaussian_smooth(img: &GrayImage, sigma: f64) -> Result<GrayImage, EdgeError> {
    let valid = sigma.is_finite() && sigma > 0.0;
    if !valid {
        return Err(EdgeError::InvalidSigma(sigma));
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let mut kernel = Vec::with_capacity(2 * radius + 1);
    for k in -(radius as i64)..=(radius as i64) {
        let t = k as f64 / sigma;
        kernel.push((-0.5 * t * t).exp());
    }
    let total: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= total;
    }

    let (h, w) = img.dimensions();
    let clamp = |v: i64, hi: usize| v.clamp(0, hi as i64 - 1) as usize;

    // The Gaussian is separable and replicate padding clamps each axis
    // independently, so two 1D passes equal the dense 2D convolution.
    let src = img.pixels();
    let mut rows = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for (ki, wk) in kernel.iter().enumerate() {
                let jj = clamp(j as i64 + ki as i64 - radius as i64, w);
                acc += wk * src[i * w + jj];
            }
            rows[i * w + j] = acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for (ki, wk) in kernel.iter().enumerate() {
                let ii = clamp(i as i64 + ki as i64 - radius as i64, h);
                acc += wk * rows[ii * w + j];
            }
            out[i * w + j] = acc.clamp(0.0, 1.0);
        }
    }
    Ok(GrayImage::new(h, w, out).expect("smoothing preserves the intensity range"))
}

/// Evaluates the Prewitt stencil pair at every pixel (replicate-padded).
pub fn prewitt_gradients(img: &GrayImage) -> GradientField {
    let (h, w) = img.dimensions();
    let padded = pad_replicate(img, 1);
    let pw = w + 2;
    let p = padded.pixels();

    let n = h * w;
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let mut magnitude = vec![0.0; n];
    let mut direction = vec![0.0; n];

    for i in 0..h {
        for j in 0..w {
            // Neighborhood of (i, j) in the padded image, centered at
            // (i + 1, j + 1).
            let top = i * pw + j;
            let mid = (i + 1) * pw + j;
            let bot = (i + 2) * pw + j;
            let (k0, k1, k2) = (p[top], p[top + 1], p[top + 2]);
            let (k7, k3) = (p[mid], p[mid + 2]);
            let (k6, k5, k4) = (p[bot], p[bot + 1], p[bot + 2]);

            let c = PREWITT_CENTER_WEIGHT;
            let x = (k2 + c * k3 + k4) - (k0 + c * k7 + k6);
            let y = (k6 + c * k5 + k4) - (k0 + c * k1 + k2);
            let idx = i * w + j;
            gx[idx] = x;
            gy[idx] = y;
            magnitude[idx] = x.abs() + y.abs();
            direction[idx] = if x == 0.0 && y == 0.0 { 0.0 } else { y.atan2(x) };
        }
    }

    GradientField {
        height: h,
        width: w,
        gx,
        gy,
        magnitude,
        direction,
    }
}

/// Marks pixels whose magnitude strictly exceeds the threshold.
pub fn threshold_edges(gf: &GradientField, policy: ThresholdPolicy) -> Result<EdgeMap, EdgeError> {
    let threshold = match policy {
        ThresholdPolicy::Fixed(t) => {
            let valid = t.is_finite() && t >= 0.0;
            if !valid {
                return Err(EdgeError::InvalidThreshold(t));
            }
            t
        }
        ThresholdPolicy::Auto => {
            let mean = gf.magnitude.iter().sum::<f64>() / gf.magnitude.len() as f64;
            AUTO_THRESHOLD_FACTOR * mean
        }
    };
    let edges = gf.magnitude.iter().map(|&m| m > threshold).collect();
    Ok(EdgeMap {
        height: gf.height,
        width: gf.width,
        edges,
        threshold_used: threshold,
    })
}

/// Direction bins for non-maximum suppression: the two neighbor offsets
/// `(di, dj)` along the quantized gradient direction.
fn nms_neighbors(angle: f64) -> [(i64, i64); 2] {
    let mut deg = angle.to_degrees();
    if deg < 0.0 {
        deg += 180.0;
    }
    if !(22.5..157.5).contains(&deg) {
        [(0, -1), (0, 1)] // gradient along x
    } else if deg < 67.5 {
        [(-1, -1), (1, 1)] // diagonal, gx and gy same sign
    } else if deg < 112.5 {
        [(-1, 0), (1, 0)] // gradient along y
    } else {
        [(-1, 1), (1, -1)] // anti-diagonal
    }
}

/// Non-maximum suppression along the quantized gradient direction: an edge
/// pixel survives iff its magnitude is >= both neighbors along its
/// direction. Out-of-range neighbors count as magnitude 0.
pub fn thin_edges(em: &EdgeMap, gf: &GradientField) -> Result<EdgeMap, EdgeError> {
    if em.dimensions() != gf.dimensions() {
        return Err(EdgeError::DimensionMismatch {
            em_h: em.height,
            em_w: em.width,
            gf_h: gf.height,
            gf_w: gf.width,
        });
    }
    let (h, w) = em.dimensions();
    let mag_at = |i: i64, j: i64| -> f64 {
        if i < 0 || j < 0 || i >= h as i64 || j >= w as i64 {
            0.0
        } else {
            gf.magnitude[i as usize * w + j as usize]
        }
    };

    let mut edges = vec![false; h * w];
    for i in 0..h {
        for j in 0..w {
            let idx = i * w + j;
            if !em.edges[idx] {
                continue;
            }
            let m = gf.magnitude[idx];
            let survives = nms_neighbors(gf.direction[idx])
                .iter()
                .all(|&(di, dj)| m >= mag_at(i as i64 + di, j as i64 + dj));
            edges[idx] = survives;
        }
    }
    Ok(EdgeMap {
        height: h,
        width: w,
        edges,
        threshold_used: em.threshold_used,
    })
}

/// The four-step pipeline: smooth (optional), Prewitt gradients, threshold,
/// and optional thinning.
pub fn detect_edges(
    img: &GrayImage,
    sigma: Option<f64>,
    policy: ThresholdPolicy,
    thin: bool,
) -> Result<EdgeMap, EdgeError> {
    let smoothed = match sigma {
        Some(s) => gaussian_smooth(img, s)?,
        None => img.clone(),
    };
    let gf = prewitt_gradients(&smoothed);
    let em = threshold_edges(&gf, policy)?;
    if thin {
        thin_edges(&em, &gf)
    } else {
        Ok(em)
    }
}

/// Serializes an edge map to the `EDGE <H> <W> <threshold>` text format
/// (same grid codec as mask files).
pub fn write_edge_map(em: &EdgeMap) -> String {
    let extra = vec![em.threshold_used.to_string()];
    grid_text::encode("EDGE", em.height, em.width, &extra, &em.edges)
}

/// Parses the `EDGE` text format.
pub fn read_edge_map(text: &str) -> Result<EdgeMap, EdgeError> {
    let grid = grid_text::decode(text, "EDGE")?;
    if grid.extra.len() != 1 {
        return Err(EdgeError::Grid(GridParseError::BadField(format!(
            "expected 1 header field after dimensions, found {}",
            grid.extra.len()
        ))));
    }
    let threshold: f64 = grid.extra[0]
        .parse()
        .map_err(|_| GridParseError::BadField(format!("threshold {:?}", grid.extra[0])))?;
    Ok(EdgeMap {
        height: grid.height,
        width: grid.width,
        edges: grid.cells,
        threshold_used: threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, rng: &mut ChaCha8Rng) -> GrayImage {
        GrayImage::new(h, w, (0..h * w).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap()
    }

    /// Brute-force Prewitt oracle: replicate-pad, then evaluate the
    /// neighborhood sums directly per pixel.
    fn prewitt_oracle(img: &GrayImage) -> (Vec<f64>, Vec<f64>) {
        let (h, w) = img.dimensions();
        let at = |i: i64, j: i64| -> f64 {
            let ii = i.clamp(0, h as i64 - 1) as usize;
            let jj = j.clamp(0, w as i64 - 1) as usize;
            img.get(ii, jj)
        };
        let mut gx = vec![0.0; h * w];
        let mut gy = vec![0.0; h * w];
        for i in 0..h as i64 {
            for j in 0..w as i64 {
                let (k0, k1, k2) = (at(i - 1, j - 1), at(i - 1, j), at(i - 1, j + 1));
                let (k7, k3) = (at(i, j - 1), at(i, j + 1));
                let (k6, k5, k4) = (at(i + 1, j - 1), at(i + 1, j), at(i + 1, j + 1));
                gx[(i * w as i64 + j) as usize] = (k2 + k3 + k4) - (k0 + k7 + k6);
                gy[(i * w as i64 + j) as usize] = (k6 + k5 + k4) - (k0 + k1 + k2);
            }
        }
        (gx, gy)
    }

    /// Dense 2D convolution oracle for the truncated Gaussian with
    /// replicate padding.
    fn gaussian_oracle(img: &GrayImage, sigma: f64) -> Vec<f64> {
        let (h, w) = img.dimensions();
        let radius = (3.0 * sigma).ceil() as i64;
        let mut weights = Vec::new();
        for di in -radius..=radius {
            for dj in -radius..=radius {
                let t = (di * di + dj * dj) as f64 / (sigma * sigma);
                weights.push(((di, dj), (-0.5 * t).exp()));
            }
        }
        let total: f64 = weights.iter().map(|(_, wt)| wt).sum();
        let at = |i: i64, j: i64| -> f64 {
            img.get(i.clamp(0, h as i64 - 1) as usize, j.clamp(0, w as i64 - 1) as usize)
        };
        let mut out = vec![0.0; h * w];
        for i in 0..h as i64 {
            for j in 0..w as i64 {
                let acc: f64 = weights
                    .iter()
                    .map(|&((di, dj), wt)| wt * at(i + di, j + dj))
                    .sum();
                out[(i * w as i64 + j) as usize] = acc / total;
            }
        }
        out
    }

    #[test]
    fn smoothing_preserves_constants() {
        for sigma in [0.5, 1.0, 2.3] {
            let img = GrayImage::constant(5, 7, 0.42).unwrap();
            let out = gaussian_smooth(&img, sigma).unwrap();
            for &v in out.pixels() {
                assert!((v - 0.42).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn smoothing_keeps_peak_location_and_shrinks_it() {
        let img = GrayImage::from_fn(9, 9, |i, j| if (i, j) == (4, 4) { 1.0 } else { 0.0 }).unwrap();
        let out = gaussian_smooth(&img, 1.0).unwrap();
        let (mut best, mut best_idx) = (f64::MIN, 0);
        for (idx, &v) in out.pixels().iter().enumerate() {
            if v > best {
                best = v;
                best_idx = idx;
            }
        }
        assert_eq!(best_idx, 4 * 9 + 4);
        assert!(best < 1.0);
    }

    #[test]
    fn smoothing_matches_dense_convolution_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let img = random_image(16, 16, &mut rng);
        let out = gaussian_smooth(&img, 1.0).unwrap();
        let want = gaussian_oracle(&img, 1.0);
        for (got, want) in out.pixels().iter().zip(&want) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn smoothing_preserves_mean_on_interior_dominated_images() {
        // Constant background with a bump far enough from the border that
        // no mass leaks through the replicate padding.
        let img = GrayImage::from_fn(16, 16, |i, j| {
            if (6..10).contains(&i) && (6..10).contains(&j) {
                0.9
            } else {
                0.3
            }
        })
        .unwrap();
        let out = gaussian_smooth(&img, 1.0).unwrap();
        let mean_in: f64 = img.pixels().iter().sum::<f64>() / 256.0;
        let mean_out: f64 = out.pixels().iter().sum::<f64>() / 256.0;
        assert!((mean_in - mean_out).abs() < 1e-9);
    }

    #[test]
    fn smoothing_rejects_bad_sigma() {
        let img = GrayImage::constant(2, 2, 0.5).unwrap();
        assert!(matches!(gaussian_smooth(&img, 0.0), Err(EdgeError::InvalidSigma(_))));
        assert!(matches!(gaussian_smooth(&img, -1.0), Err(EdgeError::InvalidSigma(_))));
    }

    #[test]
    fn prewitt_constant_image_has_zero_gradients() {
        let img = GrayImage::constant(4, 4, 0.6).unwrap();
        let gf = prewitt_gradients(&img);
        assert!(gf.gx().iter().all(|&v| v == 0.0));
        assert!(gf.gy().iter().all(|&v| v == 0.0));
        assert!(gf.magnitude().iter().all(|&v| v == 0.0));
        assert!(gf.direction().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn prewitt_right_column_step_hand_value() {
        // Every row is (0, 0, 1): at the center, the right column sums to 3
        // and the left column to 0.
        let img = GrayImage::from_fn(3, 3, |_, j| if j == 2 { 1.0 } else { 0.0 }).unwrap();
        let gf = prewitt_gradients(&img);
        assert_eq!(gf.gx()[4], 3.0);
        assert_eq!(gf.gy()[4], 0.0);
        assert_eq!(gf.magnitude()[4], 3.0);
    }

    #[test]
    fn prewitt_matches_bruteforce_oracle_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let img = random_image(7, 7, &mut rng);
            let gf = prewitt_gradients(&img);
            let (gx, gy) = prewitt_oracle(&img);
            assert_eq!(gf.gx(), &gx[..]);
            assert_eq!(gf.gy(), &gy[..]);
        }
    }

    #[test]
    fn transpose_swaps_gradient_roles() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let img = random_image(5, 5, &mut rng);
            let t = GrayImage::from_fn(5, 5, |i, j| img.get(j, i)).unwrap();
            let gf = prewitt_gradients(&img);
            let gt = prewitt_gradients(&t);
            for i in 0..5 {
                for j in 0..5 {
                    assert!((gt.gx()[i * 5 + j] - gf.gy()[j * 5 + i]).abs() < 1e-12);
                    assert!((gt.gy()[i * 5 + j] - gf.gx()[j * 5 + i]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn shift_invariance_without_clamping() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let img = GrayImage::new(6, 6, (0..36).map(|_| rng.random_range(0.0..0.8)).collect())
            .unwrap();
        let shifted = GrayImage::new(6, 6, img.pixels().iter().map(|v| v + 0.1).collect()).unwrap();
        let a = prewitt_gradients(&img);
        let b = prewitt_gradients(&shifted);
        for (x, y) in a.gx().iter().zip(b.gx()) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in a.gy().iter().zip(b.gy()) {
            assert!((x - y).abs() < 1e-12);
        }
        // With the Auto policy the realized thresholds match too, so the
        // edge maps are identical.
        let ea = detect_edges(&img, Some(1.0), ThresholdPolicy::Auto, false).unwrap();
        let eb = detect_edges(&shifted, Some(1.0), ThresholdPolicy::Auto, false).unwrap();
        assert_eq!(ea.edges(), eb.edges());
    }

    #[test]
    fn threshold_is_strict() {
        let img = GrayImage::constant(3, 3, 0.5).unwrap();
        let gf = prewitt_gradients(&img);
        let em = threshold_edges(&gf, ThresholdPolicy::Fixed(0.0)).unwrap();
        assert_eq!(em.edge_count(), 0);
    }

    #[test]
    fn threshold_selects_by_magnitude() {
        let gf = GradientField {
            height: 2,
            width: 2,
            gx: vec![1.0, 2.0, 3.0, 4.0],
            gy: vec![0.0; 4],
            magnitude: vec![1.0, 2.0, 3.0, 4.0],
            direction: vec![0.0; 4],
        };
        let em = threshold_edges(&gf, ThresholdPolicy::Fixed(2.5)).unwrap();
        assert_eq!(em.edges(), &[false, false, true, true]);
        assert_eq!(em.threshold_used(), 2.5);
    }

    #[test]
    fn auto_threshold_on_constant_image_finds_nothing() {
        let img = GrayImage::constant(5, 5, 0.7).unwrap();
        let em = detect_edges(&img, Some(1.0), ThresholdPolicy::Auto, false).unwrap();
        assert_eq!(em.edge_count(), 0);
        assert_eq!(em.threshold_used(), 0.0);
    }

    #[test]
    fn edge_count_is_monotone_in_fixed_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let img = random_image(8, 8, &mut rng);
        let gf = prewitt_gradients(&img);
        let mut prev = usize::MAX;
        for step in 0..12 {
            let t = step as f64 * 0.25;
            let count = threshold_edges(&gf, ThresholdPolicy::Fixed(t)).unwrap().edge_count();
            assert!(count <= prev);
            prev = count;
        }
    }

    #[test]
    fn thinning_empty_map_stays_empty() {
        let img = GrayImage::constant(4, 4, 0.2).unwrap();
        let gf = prewitt_gradients(&img);
        let em = threshold_edges(&gf, ThresholdPolicy::Fixed(1.0)).unwrap();
        let thinned = thin_edges(&em, &gf).unwrap();
        assert_eq!(thinned.edge_count(), 0);
    }

    #[test]
    fn isolated_edge_pixel_survives_thinning() {
        let img = GrayImage::from_fn(7, 7, |i, j| if (i, j) == (3, 3) { 1.0 } else { 0.0 }).unwrap();
        let gf = prewitt_gradients(&img);
        // Threshold high enough that only the strongest responses remain,
        // then verify every survivor of NMS is still a local max; the pixel
        // ring around the bright dot thins, the map never gains pixels.
        let em = threshold_edges(&gf, ThresholdPolicy::Fixed(2.5)).unwrap();
        let thinned = thin_edges(&em, &gf).unwrap();
        for (t, e) in thinned.edges().iter().zip(em.edges()) {
            assert!(!t || *e);
        }
        // A genuinely isolated edge pixel (zero-magnitude surroundings)
        // survives because both directional neighbors have magnitude 0.
        let lone = EdgeMap::new(3, 3, {
            let mut v = vec![false; 9];
            v[4] = true;
            v
        }, 0.5)
        .unwrap();
        let lone_gf = GradientField {
            height: 3,
            width: 3,
            gx: {
                let mut v = vec![0.0; 9];
                v[4] = 1.0;
                v
            },
            gy: vec![0.0; 9],
            magnitude: {
                let mut v = vec![0.0; 9];
                v[4] = 1.0;
                v
            },
            direction: vec![0.0; 9],
        };
        let out = thin_edges(&lone, &lone_gf).unwrap();
        assert!(out.is_edge(1, 1));
        assert_eq!(out.edge_count(), 1);
    }

    /// Independent NMS oracle: quantize the angle, compare against both
    /// directional neighbors with out-of-range treated as zero.
    fn nms_oracle(em: &EdgeMap, gf: &GradientField) -> Vec<bool> {
        let (h, w) = em.dimensions();
        let mut out = vec![false; h * w];
        for i in 0..h as i64 {
            for j in 0..w as i64 {
                let idx = (i * w as i64 + j) as usize;
                if !em.edges()[idx] {
                    continue;
                }
                let mut deg = gf.direction()[idx].to_degrees();
                if deg < 0.0 {
                    deg += 180.0;
                }
                let offs: [(i64, i64); 2] = if !(22.5..157.5).contains(&deg) {
                    [(0, -1), (0, 1)]
                } else if deg < 67.5 {
                    [(-1, -1), (1, 1)]
                } else if deg < 112.5 {
                    [(-1, 0), (1, 0)]
                } else {
                    [(-1, 1), (1, -1)]
                };
                let m = gf.magnitude()[idx];
                let ok = offs.iter().all(|&(di, dj)| {
                    let (ni, nj) = (i + di, j + dj);
                    let nm = if ni < 0 || nj < 0 || ni >= h as i64 || nj >= w as i64 {
                        0.0
                    } else {
                        gf.magnitude()[(ni * w as i64 + nj) as usize]
                    };
                    m >= nm
                });
                out[idx] = ok;
            }
        }
        out
    }

    #[test]
    fn asymmetric_ramp_thins_to_single_column() {
        // Column profile 0, 0.1, 0.5, 0.9, 1, 1: the gradient peaks uniquely
        // at the steep middle column, so a 3-wide band thins to one line.
        let profile = [0.0, 0.1, 0.5, 0.9, 1.0, 1.0];
        let img = GrayImage::from_fn(6, 6, |_, j| profile[j]).unwrap();
        let gf = prewitt_gradients(&img);
        let em = threshold_edges(&gf, ThresholdPolicy::Fixed(0.8)).unwrap();
        // Band is three columns wide before thinning.
        let band_cols: Vec<usize> = (0..6).filter(|&j| em.is_edge(3, j)).collect();
        assert_eq!(band_cols, vec![1, 2, 3]);

        let thinned = thin_edges(&em, &gf).unwrap();
        assert_eq!(thinned.edges(), &nms_oracle(&em, &gf)[..]);
        for i in 0..6 {
            let cols: Vec<usize> = (0..6).filter(|&j| thinned.is_edge(i, j)).collect();
            assert_eq!(cols, vec![2], "row {i}");
        }
    }

    #[test]
    fn thinning_matches_oracle_on_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..30 {
            let img = random_image(9, 9, &mut rng);
            let gf = prewitt_gradients(&img);
            let em = threshold_edges(&gf, ThresholdPolicy::Auto).unwrap();
            let thinned = thin_edges(&em, &gf).unwrap();
            assert_eq!(thinned.edges(), &nms_oracle(&em, &gf)[..]);
        }
    }

    #[test]
    fn detect_constant_image_is_empty() {
        let img = GrayImage::constant(8, 8, 0.25).unwrap();
        let em = detect_edges(&img, Some(1.0), ThresholdPolicy::Auto, true).unwrap();
        assert_eq!(em.edge_count(), 0);
    }

    #[test]
    fn detect_step_image_yields_vertical_band() {
        // Wide enough that the auto threshold (4x mean) sits below the peak.
        let img = GrayImage::from_fn(8, 16, |_, j| if j < 8 { 0.0 } else { 1.0 }).unwrap();
        let em = detect_edges(&img, None, ThresholdPolicy::Auto, false).unwrap();
        // Edges hug the jump between columns 7 and 8 on every row.
        for i in 0..8 {
            for j in 0..16 {
                assert_eq!(em.is_edge(i, j), j == 7 || j == 8, "({i},{j})");
            }
        }
        // The perfectly symmetric step ties the two boundary columns, and
        // ties survive NMS on both sides; thinning still never widens it.
        let thinned = detect_edges(&img, None, ThresholdPolicy::Auto, true).unwrap();
        for i in 0..8 {
            let cols: Vec<usize> = (0..16).filter(|&j| thinned.is_edge(i, j)).collect();
            assert_eq!(cols, vec![7, 8], "row {i}");
        }
    }

    #[test]
    fn magnitude_invariant_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let img = random_image(6, 6, &mut rng);
        let gf = prewitt_gradients(&img);
        for idx in 0..36 {
            assert_eq!(gf.magnitude()[idx], gf.gx()[idx].abs() + gf.gy()[idx].abs());
        }
        // The Euclidean alternative never exceeds the l1 form.
        for (l2, l1) in gf.euclidean_magnitude().iter().zip(gf.magnitude()) {
            assert!(*l2 <= l1 + 1e-12);
        }
    }

    #[test]
    fn edge_map_text_roundtrip() {
        let img = GrayImage::from_fn(5, 5, |_, j| if j < 2 { 0.1 } else { 0.9 }).unwrap();
        let em = detect_edges(&img, Some(1.0), ThresholdPolicy::Auto, false).unwrap();
        let text = write_edge_map(&em);
        assert!(text.starts_with("EDGE 5 5 "));
        assert_eq!(read_edge_map(&text).unwrap(), em);
    }

    #[test]
    fn edge_params_canonical_roundtrip() {
        let cases = [
            EdgeParams::default(),
            EdgeParams { sigma: None, policy: ThresholdPolicy::Fixed(0.75), thin: true },
            EdgeParams { sigma: Some(2.5), policy: ThresholdPolicy::Auto, thin: true },
        ];
        for p in cases {
            let s = p.canonical_string();
            let back = EdgeParams::parse_canonical(&s).unwrap();
            assert_eq!(back, p);
            assert_eq!(back.digest(), p.digest());
        }
        assert_ne!(
            EdgeParams::default().digest(),
            EdgeParams { thin: true, ..Default::default() }.digest()
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        // Thinning never adds edge pixels.
        #[test]
        fn thinning_is_a_subset(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let img = random_image(8, 8, &mut rng);
            let gf = prewitt_gradients(&img);
            let em = threshold_edges(&gf, ThresholdPolicy::Auto).unwrap();
            let thinned = thin_edges(&em, &gf).unwrap();
            for (t, e) in thinned.edges().iter().zip(em.edges()) {
                prop_assert!(!t || *e);
            }
        }
    }
}
