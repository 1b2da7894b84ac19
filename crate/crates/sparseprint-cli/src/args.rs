//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sparseprint::edges::{EdgeParams, ThresholdPolicy};
use sparseprint::matching::DEFAULT_MATCH_THRESHOLD;
use sparseprint::tv_recon::SolverParams;

#[derive(Debug, Parser)]
#[command(
    name = "sparseprint",
    version,
    about = "Reconstructs fingerprint images from a random subset of their pixels and identifies them against an enrolled gallery"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Add a print to a gallery (creating the gallery if needed)
    Enroll(EnrollArgs),
    /// Randomly discard pixels from an image, writing the mask and the
    /// degraded image
    Degrade(DegradeArgs),
    /// Recover a full image from the pixels selected by a mask
    Reconstruct(ReconstructArgs),
    /// Match a (possibly degraded) probe against a gallery
    Identify(IdentifyArgs),
    /// Sweep availability fractions over a gallery and report
    /// identification rates
    Bench(BenchArgs),
    /// Generate a synthetic print set with a ground-truth label file
    GenFixtures(GenFixturesArgs),
}

/// Solver weights and stopping controls, shared by every command that
/// reconstructs.
#[derive(Debug, Args)]
pub struct SolverFlags {
    /// TV regularization weight
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Data-fidelity weight
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Largest gradient step per iteration
    #[arg(long = "step", default_value_t = 0.2)]
    pub step: f64,
    #[arg(long = "max-iters", default_value_t = 2000)]
    pub max_iters: usize,
    /// Relative-change stopping tolerance
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    /// Residual the final image must meet to count as converged
    #[arg(long = "fidelity-tol", default_value_t = 1e-6)]
    pub fidelity_tol: f64,
}

impl SolverFlags {
    pub fn to_params(&self) -> SolverParams {
        SolverParams {
            alpha: self.alpha,
            eta: self.eta,
            max_iters: self.max_iters,
            step_size: self.step,
            tol: self.tol,
            fidelity_tol: self.fidelity_tol,
        }
    }
}

/// Edge-detection parameters. Left unset, commands that work against a
/// gallery use the gallery's stored parameters.
#[derive(Debug, Args)]
pub struct EdgeFlags {
    /// Gaussian smoothing width; "none" disables smoothing
    #[arg(long)]
    pub sigma: Option<String>,
    /// Edge threshold: "auto" or a fixed nonnegative value
    #[arg(long = "edge-thresh")]
    pub edge_thresh: Option<String>,
    /// Thin detected edges by non-maximum suppression
    #[arg(long)]
    pub thin: bool,
}

impl EdgeFlags {
    /// True when the user set any edge flag explicitly.
    pub fn explicit(&self) -> bool {
        self.sigma.is_some() || self.edge_thresh.is_some() || self.thin
    }

    pub fn to_params(&self) -> Result<EdgeParams, String> {
        let defaults = EdgeParams::default();
        let sigma = match self.sigma.as_deref() {
            None => defaults.sigma,
            Some("none") => None,
            Some(text) => {
                let value: f64 = text
                    .parse()
                    .map_err(|_| format!("--sigma expects a number or \"none\", got {text:?}"))?;
                if value <= 0.0 || !value.is_finite() {
                    return Err(format!("--sigma must be positive, got {value}"));
                }
                Some(value)
            }
        };
        let policy = match self.edge_thresh.as_deref() {
            None => defaults.policy,
            Some("auto") => ThresholdPolicy::Auto,
            Some(text) => {
                let value: f64 = text.parse().map_err(|_| {
                    format!("--edge-thresh expects \"auto\" or a number, got {text:?}")
                })?;
                if value < 0.0 || !value.is_finite() {
                    return Err(format!("--edge-thresh must be nonnegative, got {value}"));
                }
                ThresholdPolicy::Fixed(value)
            }
        };
        Ok(EdgeParams {
            sigma,
            policy,
            thin: self.thin,
        })
    }
}

#[derive(Debug, Args)]
pub struct EnrollArgs {
    /// Gallery directory
    #[arg(long)]
    pub gallery: PathBuf,
    /// Label for the print
    #[arg(long)]
    pub label: String,
    /// PGM image to enroll
    pub image: PathBuf,
    #[command(flatten)]
    pub edge: EdgeFlags,
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    /// PGM image to degrade
    pub image: PathBuf,
    /// Fraction of pixels to keep, in [0, 1]
    #[arg(long)]
    pub fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path for the mask file
    #[arg(long)]
    pub mask: PathBuf,
    /// Output path for the degraded PGM (missing pixels black)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Source PGM; pixels outside the mask are ignored
    pub image: PathBuf,
    /// Mask file selecting the measured pixels
    #[arg(long, conflicts_with_all = ["fraction", "seed"])]
    pub mask: Option<PathBuf>,
    /// Generate the mask on the fly with this availability fraction
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path for the reconstructed PGM
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth PGM; adds a PSNR line to the report
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    /// Gallery directory
    #[arg(long)]
    pub gallery: PathBuf,
    /// Probe PGM image
    pub image: PathBuf,
    /// Acceptance threshold on the match percentage (strict)
    #[arg(long, default_value_t = DEFAULT_MATCH_THRESHOLD)]
    pub threshold: f64,
    /// Degrade-and-reconstruct the probe with this mask before matching
    #[arg(long, conflicts_with_all = ["fraction", "seed"])]
    pub mask: Option<PathBuf>,
    /// Degrade-and-reconstruct the probe at this availability fraction
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the match report CSV to this path
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[command(flatten)]
    pub edge: EdgeFlags,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Gallery directory
    #[arg(long)]
    pub gallery: PathBuf,
    /// Label file (`label,file` CSV) naming the probe images; paths are
    /// relative to the file's directory
    #[arg(long)]
    pub probes: PathBuf,
    /// Comma-separated availability fractions in (0, 1]
    #[arg(long, default_value = "0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")]
    pub fractions: String,
    /// Trials per (fraction, probe) pair
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Base seed; per-trial seeds derive from it deterministically
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_MATCH_THRESHOLD)]
    pub threshold: f64,
    /// Output CSV path
    #[arg(long)]
    pub csv: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
}

#[derive(Debug, Args)]
pub struct GenFixturesArgs {
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Image side length in pixels
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
