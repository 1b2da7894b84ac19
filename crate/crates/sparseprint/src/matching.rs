//! Edge-map comparison and the identification decision rule.
//!
//! The match percentage counts positions where two boolean edge maps agree
//! (both edge or both non-edge) over all pixels. A probe is accepted when
//! its best gallery score strictly exceeds the decision threshold.

use thiserror::Error;

use crate::edges::EdgeMap;

/// Decision threshold used when the caller does not override it.
pub const DEFAULT_MATCH_THRESHOLD: f64 = 90.0;

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("probe is {probe_h}x{probe_w} but candidate is {cand_h}x{cand_w}")]
    DimensionMismatch {
        probe_h: usize,
        probe_w: usize,
        cand_h: usize,
        cand_w: usize,
    },
    #[error("gallery has no entries compatible with the probe")]
    EmptyGallery,
}

/// Agreement between two edge maps.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchScore {
    /// `100 * agreeing_pixels / total_pixels`.
    pub percentage: f64,
    pub agreeing_pixels: usize,
    pub total_pixels: usize,
}

/// Scores against every compatible gallery entry, sorted best first.
#[derive(Debug, Clone)]
pub struct MatchReport {
    /// `(label, score)` pairs in descending percentage order; ties are
    /// broken by the lexicographically smaller label.
    pub scores: Vec<(String, MatchScore)>,
    pub best_label: Option<String>,
    /// True iff the best percentage strictly exceeds `threshold`.
    pub accepted: bool,
    pub threshold: f64,
    /// Labels skipped because their dimensions did not match the probe.
    pub skipped: Vec<String>,
}

impl MatchReport {
    pub fn best_score(&self) -> Option<&MatchScore> {
        self.scores.first().map(|(_, s)| s)
    }

    /// The decision label: the best label when accepted, otherwise none
    /// (an unknown print).
    pub fn decision(&self) -> Option<&str> {
        if self.accepted {
            self.best_label.as_deref()
        } else {
            None
        }
    }
}

/// Pixelwise agreement between two same-size edge maps.
pub fn match_score(probe: &EdgeMap, candidate: &EdgeMap) -> Result<MatchScore, MatchError> {
    if probe.dimensions() != candidate.dimensions() {
        return Err(MatchError::DimensionMismatch {
            probe_h: probe.height(),
            probe_w: probe.width(),
            cand_h: candidate.height(),
            cand_w: candidate.width(),
        });
    }
    let agreeing_pixels = probe
        .edges()
        .iter()
        .zip(candidate.edges())
        .filter(|(a, b)| a == b)
        .count();
    let total_pixels = probe.edges().len();
    Ok(MatchScore {
        percentage: 100.0 * agreeing_pixels as f64 / total_pixels as f64,
        agreeing_pixels,
        total_pixels,
    })
}

/// Scores the probe against every compatible `(label, edge map)` candidate
/// and applies the strict `> threshold` acceptance rule.
pub fn identify<'a, I>(probe: &EdgeMap, gallery: I, threshold: f64) -> Result<MatchReport, MatchError>
where
    I: IntoIterator<Item = (&'a str, &'a EdgeMap)>,
{
    let mut scores = Vec::new();
    let mut skipped = Vec::new();
    for (label, candidate) in gallery {
        if candidate.dimensions() != probe.dimensions() {
            skipped.push(label.to_string());
            continue;
        }
        let score = match_score(probe, candidate)?;
        scores.push((label.to_string(), score));
    }
    if scores.is_empty() {
        return Err(MatchError::EmptyGallery);
    }

    // Equal totals make agreement counts and percentages order identically;
    // sorting on the integer count keeps ties exact.
    scores.sort_by(|(la, sa), (lb, sb)| {
        sb.agreeing_pixels
            .cmp(&sa.agreeing_pixels)
            .then_with(|| la.cmp(lb))
    });

    let best_label = Some(scores[0].0.clone());
    let accepted = scores[0].1.percentage > threshold;
    Ok(MatchReport {
        scores,
        best_label,
        accepted,
        threshold,
        skipped,
    })
}

/// Renders a report as CSV: a header, one row per candidate, and a trailing
/// `DECISION` line naming the accepted label or `UNKNOWN`.
pub fn report_to_csv(report: &MatchReport) -> String {
    let mut out = String::from("label,percentage,agreeing,total\n");
    for (label, score) in &report.scores {
        out.push_str(&format!(
            "{label},{:.4},{},{}\n",
            score.percentage, score.agreeing_pixels, score.total_pixels
        ));
    }
    let decision = report.decision().unwrap_or("UNKNOWN");
    let best_pct = report.best_score().map(|s| s.percentage).unwrap_or(0.0);
    out.push_str(&format!("DECISION,{decision},{best_pct:.4}\n"));
    out
}
