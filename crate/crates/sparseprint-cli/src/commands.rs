//! Implementations behind each subcommand. Every command returns its
//! process exit code; errors bubble up and exit 1.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use sparseprint::edges::EdgeError;
use sparseprint::fixtures::{generate_set, print_label};
use sparseprint::gallery::{Gallery, GalleryError};
use sparseprint::imaging::{read_pgm, write_pgm, GrayImage, ImageError};
use sparseprint::matching::report_to_csv;
use sparseprint::metrics::{psnr, MetricsError};
use sparseprint::sampling::{embed, measure, random_mask, read_mask, write_mask, SamplingError};
use sparseprint::tv_recon::{reconstruct, TvError};

use crate::args::{
    BenchArgs, Cli, Command, DegradeArgs, EnrollArgs, GenFixturesArgs, IdentifyArgs,
    ReconstructArgs,
};
use crate::sweep::{rows_to_csv, run_sweep, summarize, summary_table, SweepConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
/// The probe was processed but no gallery entry matched above threshold.
pub const EXIT_UNKNOWN: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Pgm { path: PathBuf, source: ImageError },
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Solver(#[from] TvError),
    #[error(transparent)]
    Edges(#[from] EdgeError),
    #[error(transparent)]
    Gallery(#[from] GalleryError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0}")]
    Invalid(String),
}

pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Enroll(args) => cmd_enroll(&args),
        Command::Degrade(args) => cmd_degrade(&args),
        Command::Reconstruct(args) => cmd_reconstruct(&args),
        Command::Identify(args) => cmd_identify(&args),
        Command::Bench(args) => cmd_bench(&args),
        Command::GenFixtures(args) => cmd_gen_fixtures(&args),
    }
}

fn read_image(path: &Path) -> Result<GrayImage, CliError> {
    let bytes = fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_pgm(&bytes).map_err(|source| CliError::Pgm {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|source| CliError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn gallery_exists(dir: &Path) -> bool {
    dir.join("manifest").is_file()
}

fn load_gallery(dir: &Path) -> Result<Gallery, CliError> {
    if !gallery_exists(dir) {
        return Err(CliError::Invalid(format!(
            "no gallery manifest at {}",
            dir.display()
        )));
    }
    Ok(Gallery::load(dir)?)
}

fn cmd_enroll(args: &EnrollArgs) -> Result<i32, CliError> {
    let image = read_image(&args.image)?;
    let gallery = if gallery_exists(&args.gallery) {
        let gallery = load_gallery(&args.gallery)?;
        if args.edge.explicit() {
            let requested = args.edge.to_params().map_err(CliError::Invalid)?;
            if requested != *gallery.edge_params() {
                return Err(CliError::Invalid(format!(
                    "gallery at {} was created with edge parameters [{}], which differ from the requested [{}]",
                    args.gallery.display(),
                    gallery.edge_params().canonical_string(),
                    requested.canonical_string()
                )));
            }
        }
        gallery
    } else {
        Gallery::new(args.edge.to_params().map_err(CliError::Invalid)?)
    };

    let gallery = gallery.enroll(&args.label, &image)?;
    gallery.save(&args.gallery)?;
    // Keep the raw print beside the manifest so the gallery can be rebuilt
    // with different edge parameters later.
    write_file(
        &args.gallery.join("images").join(format!("{}.pgm", args.label)),
        &write_pgm(&image),
    )?;
    println!(
        "enrolled {} ({} print{} in gallery)",
        args.label,
        gallery.len(),
        if gallery.len() == 1 { "" } else { "s" }
    );
    Ok(EXIT_OK)
}

fn cmd_degrade(args: &DegradeArgs) -> Result<i32, CliError> {
    let image = read_image(&args.image)?;
    let (h, w) = image.dimensions();
    let mask = random_mask(h, w, args.fraction, args.seed)?;
    let ms = measure(&image, &mask)?;

    write_file(&args.mask, write_mask(&mask).as_bytes())?;
    // Missing pixels render black.
    write_file(&args.out, &write_pgm(&embed(&ms, 0.0)))?;
    println!(
        "kept {} of {} pixels (fraction {})",
        mask.kept_count(),
        h * w,
        mask.available_fraction()
    );
    Ok(EXIT_OK)
}

/// Resolves the measurement mask for commands accepting either a mask file
/// or an on-the-fly (fraction, seed) pair.
fn resolve_mask(
    image: &GrayImage,
    mask_path: Option<&Path>,
    fraction: Option<f64>,
    seed: u64,
) -> Result<Option<sparseprint::PixelMask>, CliError> {
    match (mask_path, fraction) {
        (Some(path), None) => {
            let mask = read_mask(&read_text(path)?)?;
            if mask.dimensions() != image.dimensions() {
                return Err(CliError::Invalid(format!(
                    "mask {} is {}x{} but the image is {}x{}",
                    path.display(),
                    mask.height(),
                    mask.width(),
                    image.height(),
                    image.width()
                )));
            }
            Ok(Some(mask))
        }
        (None, Some(fraction)) => {
            let (h, w) = image.dimensions();
            Ok(Some(random_mask(h, w, fraction, seed)?))
        }
        (None, None) => Ok(None),
        (Some(_), Some(_)) => Err(CliError::Invalid(
            "--mask and --fraction are mutually exclusive".into(),
        )),
    }
}

fn cmd_reconstruct(args: &ReconstructArgs) -> Result<i32, CliError> {
    let image = read_image(&args.image)?;
    let mask = resolve_mask(&image, args.mask.as_deref(), args.fraction, args.seed)?
        .ok_or_else(|| CliError::Invalid("provide --mask FILE or --fraction F".into()))?;
    let ms = measure(&image, &mask)?;
    let result = reconstruct(&ms, &args.solver.to_params())?;

    write_file(&args.out, &write_pgm(&result.image))?;
    println!("iterations_used={}", result.iterations_used);
    println!("final_objective={:.6}", result.final_objective);
    println!("final_fidelity={:.3e}", result.final_fidelity);
    println!("converged={}", result.converged);
    if let Some(truth_path) = &args.truth {
        let truth = read_image(truth_path)?;
        println!("psnr_db={:.4}", psnr(&result.image, &truth)?);
    }
    Ok(EXIT_OK)
}

fn cmd_identify(args: &IdentifyArgs) -> Result<i32, CliError> {
    let gallery = load_gallery(&args.gallery)?;
    let image = read_image(&args.image)?;

    let probe_image = match resolve_mask(&image, args.mask.as_deref(), args.fraction, args.seed)? {
        Some(mask) => {
            let ms = measure(&image, &mask)?;
            let result = reconstruct(&ms, &args.solver.to_params())?;
            if !result.converged {
                eprintln!(
                    "note: reconstruction did not converge ({} iterations)",
                    result.iterations_used
                );
            }
            result.image
        }
        None => image,
    };

    let params = if args.edge.explicit() {
        args.edge.to_params().map_err(CliError::Invalid)?
    } else {
        gallery.edge_params().clone()
    };
    let edge_map = params.detect(&probe_image)?;
    let report = gallery.identify(&edge_map, &params, args.threshold)?;

    let csv = report_to_csv(&report);
    print!("{csv}");
    if let Some(path) = &args.csv {
        write_file(path, csv.as_bytes())?;
    }
    for label in &report.skipped {
        eprintln!("note: skipped {label} (dimension mismatch)");
    }
    Ok(if report.accepted { EXIT_OK } else { EXIT_UNKNOWN })
}

/// Parses a `label,file` CSV (the gen-fixtures label file); image paths are
/// taken relative to the CSV's directory.
fn read_probe_list(path: &Path) -> Result<Vec<(String, GrayImage)>, CliError> {
    let text = read_text(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut probes = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line_no == 0 {
            if line != "label,file" {
                return Err(CliError::Invalid(format!(
                    "{}: expected header \"label,file\", found {line:?}",
                    path.display()
                )));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (label, file) = line.split_once(',').ok_or_else(|| {
            CliError::Invalid(format!("{}:{}: malformed row {line:?}", path.display(), line_no + 1))
        })?;
        probes.push((label.to_string(), read_image(&base.join(file))?));
    }
    Ok(probes)
}

fn parse_fractions(text: &str) -> Result<Vec<f64>, CliError> {
    let mut fractions = Vec::new();
    for piece in text.split(',') {
        let value: f64 = piece
            .trim()
            .parse()
            .map_err(|_| CliError::Invalid(format!("bad fraction {piece:?}")))?;
        if !(value > 0.0 && value <= 1.0) {
            return Err(CliError::Invalid(format!(
                "fraction {value} is outside (0, 1]"
            )));
        }
        fractions.push(value);
    }
    if fractions.is_empty() {
        return Err(CliError::Invalid("no fractions given".into()));
    }
    fractions.sort_by(|a, b| a.partial_cmp(b).expect("fractions are finite"));
    Ok(fractions)
}

fn cmd_bench(args: &BenchArgs) -> Result<i32, CliError> {
    let gallery = load_gallery(&args.gallery)?;
    let probes = read_probe_list(&args.probes)?;
    if probes.is_empty() {
        return Err(CliError::Invalid("probe list is empty".into()));
    }
    if args.trials == 0 {
        return Err(CliError::Invalid("--trials must be at least 1".into()));
    }
    let config = SweepConfig {
        fractions: parse_fractions(&args.fractions)?,
        trials_per_fraction: args.trials,
        base_seed: args.seed,
        threshold: args.threshold,
        solver: args.solver.to_params(),
    };

    let rows = run_sweep(&gallery, &probes, &config);
    write_file(&args.csv, rows_to_csv(&rows).as_bytes())?;
    print!("{}", summary_table(&summarize(&rows)));

    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    if failures > 0 {
        eprintln!("note: {failures} trial(s) recorded errors; see the CSV");
    }
    Ok(EXIT_OK)
}

fn cmd_gen_fixtures(args: &GenFixturesArgs) -> Result<i32, CliError> {
    if args.size == 0 {
        return Err(CliError::Invalid("--size must be positive".into()));
    }
    fs::create_dir_all(&args.out).map_err(|source| CliError::Io {
        path: args.out.clone(),
        source,
    })?;

    let mut labels = String::from("label,file\n");
    for (index, (label, image)) in generate_set(args.count, args.size, args.seed)
        .into_iter()
        .enumerate()
    {
        let file = format!("{}.pgm", print_label(index));
        write_file(&args.out.join(&file), &write_pgm(&image))?;
        labels.push_str(&format!("{label},{file}\n"));
    }
    write_file(&args.out.join("labels.csv"), labels.as_bytes())?;
    println!(
        "wrote {} print(s) at {}x{} to {}",
        args.count,
        args.size,
        args.size,
        args.out.display()
    );
    Ok(EXIT_OK)
}
