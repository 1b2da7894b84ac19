//! Fingerprint identification under missing-pixel degradation.
//!
//! The pipeline: a grayscale print is subsampled by a random pixel mask
//! ([`sampling`]), the full image is recovered from the surviving pixels by
//! constrained total-variation minimization ([`tv_recon`]), a Prewitt edge
//! map is extracted ([`edges`]), and the map is scored against an enrolled
//! gallery of templates ([`gallery`], [`matching`]) with a percentage-match
//! accept/reject rule.
//!
//! [`fixtures`] generates deterministic synthetic ridge textures so the
//! whole pipeline can be exercised without a real print database, and
//! [`metrics`] provides the PSNR measure used by the benchmark harness.

pub mod digest;
pub mod edges;
pub mod fixtures;
pub mod gallery;
pub mod imaging;
pub mod matching;
pub mod metrics;
pub mod sampling;
pub mod tv_recon;

mod grid_text;

pub use imaging::{GrayImage, RgbImage};
pub use sampling::{MeasurementSet, PixelMask};
