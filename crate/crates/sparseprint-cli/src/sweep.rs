//! The availability-sweep benchmark: degrade, reconstruct, detect, and
//! identify every probe at every fraction, many trials each.

use sparseprint::digest::fnv1a64;
use sparseprint::gallery::Gallery;
use sparseprint::imaging::GrayImage;
use sparseprint::metrics::psnr;
use sparseprint::sampling::{measure, random_mask};
use sparseprint::tv_recon::{reconstruct, SolverParams};

/// CSV schema tag written as the first header line.
pub const SWEEP_SCHEMA: &str = "SWEEP-1";

/// Column header line of the sweep CSV.
pub const SWEEP_COLUMNS: &str =
    "fraction,trial,seed,probe,psnr_db,best_label,best_percentage,accepted,correct,error";

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Availability fractions, ascending.
    pub fractions: Vec<f64>,
    pub trials_per_fraction: usize,
    pub base_seed: u64,
    /// Acceptance threshold on the match percentage.
    pub threshold: f64,
    pub solver: SolverParams,
}

/// One (fraction, probe, trial) outcome. Failures carry their message in
/// `error` and leave the metric fields empty.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub fraction: f64,
    pub trial: usize,
    pub seed: u64,
    pub probe: String,
    pub psnr_db: Option<f64>,
    pub best_label: Option<String>,
    pub best_percentage: Option<f64>,
    pub accepted: bool,
    pub correct: bool,
    pub error: Option<String>,
}

/// Per-fraction aggregate of the sweep rows.
#[derive(Debug, Clone)]
pub struct FractionSummary {
    pub fraction: f64,
    pub trials: usize,
    pub mean_psnr_db: f64,
    pub acceptance_rate: f64,
    pub correct_rate: f64,
}

/// Deterministic per-trial seed, mixed from the base seed and the trial
/// coordinates so reruns and reordered fraction lists agree.
pub fn trial_seed(base: u64, fraction: f64, trial: usize, probe_idx: usize) -> u64 {
    let mut bytes = Vec::with_capacity(32);
    bytes.extend_from_slice(&base.to_le_bytes());
    bytes.extend_from_slice(&fraction.to_bits().to_le_bytes());
    bytes.extend_from_slice(&(trial as u64).to_le_bytes());
    bytes.extend_from_slice(&(probe_idx as u64).to_le_bytes());
    fnv1a64(&bytes)
}

/// Runs the full protocol. Rows come out ordered by (fraction, trial,
/// probe); a failed trial is recorded and the run continues.
pub fn run_sweep(
    gallery: &Gallery,
    probes: &[(String, GrayImage)],
    config: &SweepConfig,
) -> Vec<SweepRow> {
    let mut rows = Vec::with_capacity(config.fractions.len() * config.trials_per_fraction);
    for &fraction in &config.fractions {
        for trial in 0..config.trials_per_fraction {
            for (probe_idx, (label, image)) in probes.iter().enumerate() {
                let seed = trial_seed(config.base_seed, fraction, trial, probe_idx);
                let mut row = SweepRow {
                    fraction,
                    trial,
                    seed,
                    probe: label.clone(),
                    psnr_db: None,
                    best_label: None,
                    best_percentage: None,
                    accepted: false,
                    correct: false,
                    error: None,
                };
                if let Err(message) = run_trial(gallery, label, image, fraction, seed, config, &mut row)
                {
                    row.error = Some(message);
                }
                rows.push(row);
            }
        }
    }
    rows
}

fn run_trial(
    gallery: &Gallery,
    truth_label: &str,
    image: &GrayImage,
    fraction: f64,
    seed: u64,
    config: &SweepConfig,
    row: &mut SweepRow,
) -> Result<(), String> {
    let (h, w) = image.dimensions();
    let mask = random_mask(h, w, fraction, seed).map_err(|e| e.to_string())?;
    let ms = measure(image, &mask).map_err(|e| e.to_string())?;
    let recon = reconstruct(&ms, &config.solver).map_err(|e| e.to_string())?;
    row.psnr_db = Some(psnr(&recon.image, image).map_err(|e| e.to_string())?);

    let edge_map = gallery
        .edge_params()
        .detect(&recon.image)
        .map_err(|e| e.to_string())?;
    let report = gallery
        .identify(&edge_map, gallery.edge_params(), config.threshold)
        .map_err(|e| e.to_string())?;

    row.best_label = report.best_label.clone();
    row.best_percentage = report.best_score().map(|s| s.percentage);
    row.accepted = report.accepted;
    row.correct = report.accepted && report.best_label.as_deref() == Some(truth_label);
    Ok(())
}

/// Renders rows as the versioned CSV: schema line, column header, then one
/// line per row with LF endings.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_SCHEMA);
    out.push('\n');
    out.push_str(SWEEP_COLUMNS);
    out.push('\n');
    for row in rows {
        let psnr = row.psnr_db.map(|v| format!("{v:.4}")).unwrap_or_default();
        let best_label = row.best_label.clone().unwrap_or_default();
        let best_pct = row
            .best_percentage
            .map(|v| format!("{v:.4}"))
            .unwrap_or_default();
        let error = row
            .error
            .as_deref()
            .map(|m| m.replace([',', '\n'], ";"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{psnr},{best_label},{best_pct},{},{},{error}\n",
            row.fraction, row.trial, row.seed, row.probe, row.accepted, row.correct
        ));
    }
    out
}

/// Aggregates rows per fraction, preserving the sweep order.
pub fn summarize(rows: &[SweepRow]) -> Vec<FractionSummary> {
    let mut summaries: Vec<FractionSummary> = Vec::new();
    for row in rows {
        let entry = match summaries.iter_mut().find(|s| s.fraction == row.fraction) {
            Some(entry) => entry,
            None => {
                summaries.push(FractionSummary {
                    fraction: row.fraction,
                    trials: 0,
                    mean_psnr_db: 0.0,
                    acceptance_rate: 0.0,
                    correct_rate: 0.0,
                });
                summaries.last_mut().expect("just pushed")
            }
        };
        entry.trials += 1;
        entry.mean_psnr_db += row.psnr_db.unwrap_or(0.0);
        entry.acceptance_rate += f64::from(u8::from(row.accepted));
        entry.correct_rate += f64::from(u8::from(row.correct));
    }
    for entry in &mut summaries {
        let n = entry.trials as f64;
        entry.mean_psnr_db /= n;
        entry.acceptance_rate /= n;
        entry.correct_rate /= n;
    }
    summaries
}

/// Plain-text summary table for stdout.
pub fn summary_table(summaries: &[FractionSummary]) -> String {
    let mut out = String::from("fraction  trials  mean_psnr_db  accept_rate  correct_rate\n");
    for s in summaries {
        out.push_str(&format!(
            "{:<8}  {:<6}  {:<12}  {:<11.3}  {:<12.3}\n",
            s.fraction,
            s.trials,
            format!("{:.4}", s.mean_psnr_db),
            s.acceptance_rate,
            s.correct_rate
        ));
    }
    out
}
