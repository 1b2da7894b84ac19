//! Deterministic synthetic fingerprint-like textures.
//!
//! Each print is an oriented quasi-periodic ridge pattern: a smooth phase
//! field (concentric, whorl-modulated, or wavy-linear, chosen per print)
//! passed through a sharpened cosine so the result has flat ridges and
//! valleys separated by thin transitions. Identical `(size, seed, index)`
//! always produce the identical image.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::edges::EdgeParams;
use crate::imaging::GrayImage;

/// Edge densities (at the default detection parameters) a generated print
/// must fall into. Too sparse and every map agrees with every other over
/// the empty majority; too dense and the texture stops being ridge-like.
const DENSITY_RANGE: std::ops::RangeInclusive<f64> = 0.08..=0.22;

/// Parameter redraws allowed before settling for the closest candidate.
const MAX_REDRAWS: u64 = 16;

/// Canonical label for the print at `index`.
pub fn print_label(index: usize) -> String {
    format!("print_{index:03}")
}

/// Generates the synthetic print `index` of the set derived from `seed`.
///
/// Candidates whose edge density at the default detection parameters falls
/// outside [`DENSITY_RANGE`] are redrawn (deterministically), so every
/// shipped print carries enough boundary structure to be a distinct
/// identity under the percentage-match rule.
pub fn generate_print(size: usize, seed: u64, index: usize) -> GrayImage {
    let detection = EdgeParams::default();
    let mut best: Option<(f64, GrayImage)> = None;
    for redraw in 0..MAX_REDRAWS {
        let img = generate_candidate(size, seed, index, redraw);
        let map = detection
            .detect(&img)
            .expect("default detection parameters are valid");
        let density = map.edge_count() as f64 / (size * size) as f64;
        if DENSITY_RANGE.contains(&density) {
            return img;
        }
        let miss = if density < *DENSITY_RANGE.start() {
            DENSITY_RANGE.start() - density
        } else {
            density - DENSITY_RANGE.end()
        };
        if best.as_ref().is_none_or(|(m, _)| miss < *m) {
            best = Some((miss, img));
        }
    }
    best.expect("at least one candidate was generated").1
}

/// One parameter draw: a thin-ridged pattern inside a soft-rimmed disc (the
/// scanned print area) on a flat mid-gray background, with a slow contrast
/// ramp across the print as if pressed unevenly. The flat surround keeps
/// the mean gradient magnitude low enough for the automatic edge threshold,
/// and the ramp parks a band of ridge boundaries near that threshold where
/// a poorly anchored reconstruction flips them.
fn generate_candidate(size: usize, seed: u64, index: usize, redraw: u64) -> GrayImage {
    assert!(size > 0, "fixture size must be positive");
    let stream = seed
        ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ redraw.wrapping_mul(0xD1B5_4A32_D192_ED03);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);

    let family = rng.random_range(0..3u8);
    let freq = rng.random_range(0.55..0.85); // rad/px, ridge period ~7-11 px
    let cx = rng.random_range(0.44..0.56) * size as f64;
    let cy = rng.random_range(0.44..0.56) * size as f64;
    let radius = rng.random_range(0.30..0.38) * size as f64;
    let rim = 3.0; // px over which the print fades into the background
    let sharp = rng.random_range(5.0..8.0);
    // Positive cut makes ridges narrower than valleys.
    let duty_cut = rng.random_range(0.25..0.50);

    // Uneven-pressure contrast ramp at a random orientation.
    let ramp_angle = rng.random_range(0.0..2.0 * PI);
    let ramp_u = ramp_angle.cos() / size as f64 * PI;
    let ramp_v = ramp_angle.sin() / size as f64 * PI;
    let ramp_p = rng.random_range(0.0..2.0 * PI);

    // Low-frequency phase perturbations so ridges meander like real papillae.
    let amp1 = rng.random_range(0.5..1.5);
    let amp2 = rng.random_range(0.5..1.5);
    let u1 = rng.random_range(0.02..0.06) * 2.0 * PI;
    let u2 = rng.random_range(0.02..0.06) * 2.0 * PI;
    let p1 = rng.random_range(0.0..2.0 * PI);
    let p2 = rng.random_range(0.0..2.0 * PI);

    // Fine-scale boundary jitter at the ~5 px scale.
    let jit_amp = rng.random_range(0.8..1.3);
    let jv1 = rng.random_range(0.16..0.24) * 2.0 * PI;
    let jv2 = rng.random_range(0.16..0.24) * 2.0 * PI;
    let jp1 = rng.random_range(0.0..2.0 * PI);
    let jp2 = rng.random_range(0.0..2.0 * PI);

    let whorl_mod = rng.random_range(0.08..0.16);
    let whorl_phase = rng.random_range(0.0..2.0 * PI);
    let arch_angle = rng.random_range(0.0..PI);
    let arch_amp = rng.random_range(3.0..8.0);
    let arch_freq = rng.random_range(0.02..0.06) * 2.0 * PI;
    let arch_phase = rng.random_range(0.0..2.0 * PI);

    GrayImage::from_fn(size, size, |i, j| {
        let x = j as f64;
        let y = i as f64;
        let dx = x - cx;
        let dy = y - cy;
        let dist = dx.hypot(dy);

        let envelope = if dist <= radius - rim {
            1.0
        } else if dist >= radius {
            0.0
        } else {
            // Half-cosine fade across the rim.
            0.5 * (1.0 + (PI * (dist - (radius - rim)) / rim).cos())
        };
        if envelope == 0.0 {
            return 0.5;
        }
        // Pressure varies across the print by a factor of about three.
        let pressure = 0.5 + 0.33 * (ramp_u * x + ramp_v * y + ramp_p).sin();

        let perturb = amp1 * (u1 * x + p1).sin()
            + amp2 * (u2 * y + p2).sin()
            + jit_amp * (jv1 * x + jp1).sin() * (jv2 * y + jp2).sin();
        let phase = match family {
            // Concentric rings around the print core.
            0 => freq * dist + perturb,
            // Rings with angular modulation, loop-like asymmetry.
            1 => {
                let theta = dy.atan2(dx);
                freq * dist * (1.0 + whorl_mod * (theta + whorl_phase).sin()) + perturb
            }
            // Wavy parallel ridges at a random orientation.
            _ => {
                let xr = x * arch_angle.cos() + y * arch_angle.sin();
                let yr = -x * arch_angle.sin() + y * arch_angle.cos();
                freq * (yr + arch_amp * (arch_freq * xr + arch_phase).sin()) + perturb
            }
        };

        0.5 + 0.45 * envelope * pressure * (sharp * (phase.cos() - duty_cut)).tanh()
    })
    .expect("generated intensities are clamped into range")
}

/// Generates `count` labeled prints. The labels are [`print_label`] values.
pub fn generate_set(count: usize, size: usize, seed: u64) -> Vec<(String, GrayImage)> {
    (0..count)
        .map(|idx| (print_label(idx), generate_print(size, seed, idx)))
        .collect()
}
