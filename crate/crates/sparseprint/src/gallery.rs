//! Persistent enrollment store: labels, edge-map templates, and provenance
//! digests.
//!
//! A gallery lives in a directory: a `manifest` text file plus one
//! `EDGE`-format grid file per entry. The manifest carries an FNV checksum
//! of its own body and a digest per edge file, so a flipped byte anywhere is
//! caught at load time. Saves write to temp files and rename, with the
//! manifest renamed last as the commit point, so a crashed save never
//! corrupts an existing store.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::digest::fnv1a64;
use crate::edges::{read_edge_map, write_edge_map, EdgeError, EdgeMap, EdgeParams};
use crate::imaging::{write_pgm, GrayImage};
use crate::matching::{identify, MatchError, MatchReport};

/// First line of every manifest; bumped on breaking format changes.
pub const GALLERY_VERSION: &str = "SPARSEPRINT-GALLERY-1";

#[derive(Debug, Error)]
pub enum GalleryError {
    #[error("label must be nonempty")]
    EmptyLabel,
    #[error("label {0:?} contains whitespace, commas, path separators, or control characters")]
    InvalidLabel(String),
    #[error("label {0:?} is already enrolled")]
    DuplicateLabel(String),
    #[error("probe edge parameters (digest {found:016x}) do not match the gallery's ({expected:016x})")]
    ParamsMismatch { expected: u64, found: u64 },
    #[error("unsupported gallery version {found:?}")]
    VersionMismatch { found: String },
    #[error("corrupt gallery manifest: {0}")]
    CorruptManifest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Edge(#[from] EdgeError),
    #[error(transparent)]
    Match(#[from] MatchError),
}

/// One enrolled print: its template plus digests tying it to the source
/// image and the detection parameters used at enrollment.
#[derive(Debug, Clone, PartialEq)]
pub struct GalleryEntry {
    pub label: String,
    pub edge_map: EdgeMap,
    /// FNV of the canonical PGM encoding of the enrolled image.
    pub image_digest: u64,
    /// FNV of the edge-parameter canonical string used at enrollment.
    pub params_digest: u64,
}

/// Immutable collection of enrolled prints sharing one edge-parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct Gallery {
    entries: BTreeMap<String, GalleryEntry>,
    edge_params: EdgeParams,
}

// Labels are manifest tokens, CSV fields, and file stems, so they must be
// free of separators for all three.
fn validate_label(label: &str) -> Result<(), GalleryError> {
    if label.is_empty() {
        return Err(GalleryError::EmptyLabel);
    }
    if label
        .chars()
        .any(|c| c.is_whitespace() || c.is_control() || c == ',' || c == '/' || c == '\\')
    {
        return Err(GalleryError::InvalidLabel(label.to_string()));
    }
    Ok(())
}

impl Gallery {
    pub fn new(edge_params: EdgeParams) -> Self {
        Self {
            entries: BTreeMap::new(),
            edge_params,
        }
    }

    pub fn edge_params(&self) -> &EdgeParams {
        &self.edge_params
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in label order.
    pub fn entries(&self) -> impl Iterator<Item = &GalleryEntry> {
        self.entries.values()
    }

    pub fn get(&self, label: &str) -> Option<&GalleryEntry> {
        self.entries.get(label)
    }

    /// Returns a new gallery with the print enrolled; the original value is
    /// unchanged.
    pub fn enroll(&self, label: &str, img: &GrayImage) -> Result<Gallery, GalleryError> {
        validate_label(label)?;
        if self.entries.contains_key(label) {
            return Err(GalleryError::DuplicateLabel(label.to_string()));
        }
        let edge_map = self.edge_params.detect(img)?;
        let entry = GalleryEntry {
            label: label.to_string(),
            edge_map,
            image_digest: fnv1a64(&write_pgm(img)),
            params_digest: self.edge_params.digest(),
        };
        let mut next = self.clone();
        next.entries.insert(label.to_string(), entry);
        Ok(next)
    }

    /// Scores a probe template against every enrolled entry.
    ///
    /// Fails fast with [`GalleryError::ParamsMismatch`] when the probe was
    /// detected with different edge parameters, so templates are never
    /// compared across parameterizations.
    pub fn identify(
        &self,
        probe: &EdgeMap,
        probe_params: &EdgeParams,
        threshold: f64,
    ) -> Result<MatchReport, GalleryError> {
        let expected = self.edge_params.digest();
        let found = probe_params.digest();
        if expected != found {
            return Err(GalleryError::ParamsMismatch { expected, found });
        }
        let pairs = self
            .entries
            .values()
            .map(|e| (e.label.as_str(), &e.edge_map));
        Ok(identify(probe, pairs, threshold)?)
    }

    /// Writes the gallery to a directory (manifest plus one edge file per
    /// entry).
    pub fn save(&self, dir: &Path) -> Result<(), GalleryError> {
        fs::create_dir_all(dir)?;

        let params_digest = self.edge_params.digest();
        let mut body = String::new();
        body.push_str(GALLERY_VERSION);
        body.push('\n');
        body.push_str(&format!(
            "params {} digest={params_digest:016x}\n",
            self.edge_params.canonical_string()
        ));

        for (idx, entry) in self.entries.values().enumerate() {
            let file = format!("edge_{idx:04}.edge");
            let text = write_edge_map(&entry.edge_map);
            let edge_digest = fnv1a64(text.as_bytes());
            write_atomically(&dir.join(&file), text.as_bytes())?;
            body.push_str(&format!(
                "entry {} {} {:016x} {:016x} {edge_digest:016x} {file} {}\n",
                entry.edge_map.height(),
                entry.edge_map.width(),
                entry.image_digest,
                entry.params_digest,
                entry.label
            ));
        }

        let checksum = fnv1a64(body.as_bytes());
        body.push_str(&format!("checksum {checksum:016x}\n"));
        write_atomically(&dir.join("manifest"), body.as_bytes())?;
        Ok(())
    }

    /// Loads a gallery saved by [`Gallery::save`], verifying the manifest
    /// checksum, per-file digests, and parameter coherence.
    pub fn load(dir: &Path) -> Result<Gallery, GalleryError> {
        let manifest = fs::read_to_string(dir.join("manifest"))?;

        let (body, checksum_line) = manifest
            .trim_end_matches('\n')
            .rsplit_once('\n')
            .ok_or_else(|| GalleryError::CorruptManifest("manifest too short".into()))?;
        let body = format!("{body}\n");
        let declared = checksum_line
            .strip_prefix("checksum ")
            .and_then(|s| u64::from_str_radix(s, 16).ok())
            .ok_or_else(|| GalleryError::CorruptManifest("missing checksum line".into()))?;
        if fnv1a64(body.as_bytes()) != declared {
            return Err(GalleryError::CorruptManifest("checksum mismatch".into()));
        }

        let mut lines = body.lines();
        let version = lines
            .next()
            .ok_or_else(|| GalleryError::CorruptManifest("empty manifest".into()))?;
        if version != GALLERY_VERSION {
            return Err(GalleryError::VersionMismatch {
                found: version.to_string(),
            });
        }

        let params_line = lines
            .next()
            .ok_or_else(|| GalleryError::CorruptManifest("missing params line".into()))?;
        let rest = params_line
            .strip_prefix("params ")
            .ok_or_else(|| GalleryError::CorruptManifest("missing params line".into()))?;
        let (canonical, digest_field) = rest
            .rsplit_once(' ')
            .ok_or_else(|| GalleryError::CorruptManifest("malformed params line".into()))?;
        let declared_params_digest = digest_field
            .strip_prefix("digest=")
            .and_then(|s| u64::from_str_radix(s, 16).ok())
            .ok_or_else(|| GalleryError::CorruptManifest("malformed params digest".into()))?;
        let edge_params = EdgeParams::parse_canonical(canonical)?;
        let params_digest = edge_params.digest();
        if params_digest != declared_params_digest {
            return Err(GalleryError::CorruptManifest(
                "params digest mismatch".into(),
            ));
        }

        let mut entries = BTreeMap::new();
        for line in lines {
            let fields = line
                .strip_prefix("entry ")
                .ok_or_else(|| GalleryError::CorruptManifest(format!("unexpected line {line:?}")))?;
            let parts: Vec<&str> = fields.split(' ').collect();
            if parts.len() != 7 {
                return Err(GalleryError::CorruptManifest(format!(
                    "entry line has {} fields, expected 7",
                    parts.len()
                )));
            }
            let height: usize = parse_dec(parts[0])?;
            let width: usize = parse_dec(parts[1])?;
            let image_digest = parse_hex(parts[2])?;
            let entry_params_digest = parse_hex(parts[3])?;
            let edge_digest = parse_hex(parts[4])?;
            let file = parts[5];
            let label = parts[6].to_string();
            validate_label(&label)
                .map_err(|_| GalleryError::CorruptManifest(format!("bad label {label:?}")))?;

            if entry_params_digest != params_digest {
                return Err(GalleryError::CorruptManifest(format!(
                    "entry {label:?} was detected with different edge parameters"
                )));
            }

            let text = fs::read_to_string(dir.join(file))?;
            if fnv1a64(text.as_bytes()) != edge_digest {
                return Err(GalleryError::CorruptManifest(format!(
                    "edge file {file} digest mismatch"
                )));
            }
            let edge_map = read_edge_map(&text)?;
            if edge_map.dimensions() != (height, width) {
                return Err(GalleryError::CorruptManifest(format!(
                    "edge file {file} is {}x{}, manifest says {height}x{width}",
                    edge_map.height(),
                    edge_map.width()
                )));
            }
            if entries
                .insert(
                    label.clone(),
                    GalleryEntry {
                        label: label.clone(),
                        edge_map,
                        image_digest,
                        params_digest: entry_params_digest,
                    },
                )
                .is_some()
            {
                return Err(GalleryError::CorruptManifest(format!(
                    "duplicate label {label:?}"
                )));
            }
        }

        Ok(Gallery {
            entries,
            edge_params,
        })
    }
}

fn parse_dec(s: &str) -> Result<usize, GalleryError> {
    s.parse()
        .map_err(|_| GalleryError::CorruptManifest(format!("bad decimal field {s:?}")))
}

fn parse_hex(s: &str) -> Result<u64, GalleryError> {
    u64::from_str_radix(s, 16)
        .map_err(|_| GalleryError::CorruptManifest(format!("bad hex field {s:?}")))
}

fn write_atomically(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edges::ThresholdPolicy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn textured_image(size: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let levels: Vec<f64> = (0..4).map(|_| rng.random_range(0.1..0.9)).collect();
        GrayImage::from_fn(size, size, |i, j| levels[(i / 3 + j / 4 + seed as usize) % 4]).unwrap()
    }

    #[test]
    fn enroll_grows_and_rejects_duplicates() {
        let g = Gallery::new(EdgeParams::default());
        assert!(g.is_empty());
        let g1 = g.enroll("alice", &textured_image(16, 1)).unwrap();
        assert_eq!(g1.len(), 1);
        assert_eq!(g.len(), 0); // original untouched
        let err = g1.enroll("alice", &textured_image(16, 2)).unwrap_err();
        assert!(matches!(err, GalleryError::DuplicateLabel(l) if l == "alice"));
    }

    #[test]
    fn label_validation() {
        let g = Gallery::new(EdgeParams::default());
        let img = textured_image(8, 1);
        assert!(matches!(g.enroll("", &img), Err(GalleryError::EmptyLabel)));
        assert!(matches!(
            g.enroll("two words", &img),
            Err(GalleryError::InvalidLabel(_))
        ));
        assert!(matches!(
            g.enroll("a,b", &img),
            Err(GalleryError::InvalidLabel(_))
        ));
        assert!(matches!(
            g.enroll("a/b", &img),
            Err(GalleryError::InvalidLabel(_))
        ));
    }

    #[test]
    fn self_identification_is_perfect() {
        let params = EdgeParams::default();
        let img1 = textured_image(16, 1);
        let img2 = textured_image(16, 2);
        let g = Gallery::new(params.clone())
            .enroll("one", &img1)
            .unwrap()
            .enroll("two", &img2)
            .unwrap();
        let probe = params.detect(&img1).unwrap();
        let report = g.identify(&probe, &params, 90.0).unwrap();
        assert_eq!(report.best_label.as_deref(), Some("one"));
        assert_eq!(report.best_score().unwrap().percentage, 100.0);
        assert!(report.accepted);
    }

    #[test]
    fn params_mismatch_fails_fast() {
        let params = EdgeParams::default();
        let g = Gallery::new(params.clone())
            .enroll("one", &textured_image(16, 1))
            .unwrap();
        let other = EdgeParams {
            thin: true,
            ..EdgeParams::default()
        };
        let probe = other.detect(&textured_image(16, 1)).unwrap();
        assert!(matches!(
            g.identify(&probe, &other, 90.0),
            Err(GalleryError::ParamsMismatch { .. })
        ));
    }

    #[test]
    fn empty_gallery_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Gallery::new(EdgeParams {
            sigma: None,
            policy: ThresholdPolicy::Fixed(0.5),
            thin: true,
        });
        g.save(dir.path()).unwrap();
        let back = Gallery::load(dir.path()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn populated_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = Gallery::new(EdgeParams::default())
            .enroll("a", &textured_image(12, 3))
            .unwrap()
            .enroll("b", &textured_image(12, 4))
            .unwrap()
            .enroll("c", &textured_image(12, 5))
            .unwrap();
        g.save(dir.path()).unwrap();
        let back = Gallery::load(dir.path()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn resaving_over_an_existing_store_works() {
        let dir = tempfile::tempdir().unwrap();
        let g1 = Gallery::new(EdgeParams::default())
            .enroll("a", &textured_image(12, 3))
            .unwrap();
        g1.save(dir.path()).unwrap();
        let g2 = g1.enroll("b", &textured_image(12, 4)).unwrap();
        g2.save(dir.path()).unwrap();
        assert_eq!(Gallery::load(dir.path()).unwrap(), g2);
    }

    #[test]
    fn tampered_manifest_byte_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let g = Gallery::new(EdgeParams::default())
            .enroll("a", &textured_image(12, 3))
            .unwrap();
        g.save(dir.path()).unwrap();

        let path = dir.path().join("manifest");
        let mut bytes = fs::read(&path).unwrap();
        // Flip a byte in the middle of the body.
        let mid = bytes.len() / 2;
        bytes[mid] = if bytes[mid] == b'0' { b'1' } else { b'0' };
        fs::write(&path, &bytes).unwrap();

        assert!(matches!(
            Gallery::load(dir.path()),
            Err(GalleryError::CorruptManifest(_)) | Err(GalleryError::VersionMismatch { .. })
        ));
    }

    #[test]
    fn tampered_edge_file_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let g = Gallery::new(EdgeParams::default())
            .enroll("a", &textured_image(12, 3))
            .unwrap();
        g.save(dir.path()).unwrap();

        let path = dir.path().join("edge_0000.edge");
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.replacen('0', "1", 1)).unwrap();

        assert!(matches!(
            Gallery::load(dir.path()),
            Err(GalleryError::CorruptManifest(_))
        ));
    }

    #[test]
    fn foreign_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = Gallery::new(EdgeParams::default());
        g.save(dir.path()).unwrap();

        let path = dir.path().join("manifest");
        let text = fs::read_to_string(&path).unwrap();
        let mut body = text.replace("SPARSEPRINT-GALLERY-1", "SPARSEPRINT-GALLERY-9");
        // Re-sign the tampered body so only the version check can fire.
        let stripped: String = body
            .lines()
            .take_while(|l| !l.starts_with("checksum "))
            .map(|l| format!("{l}\n"))
            .collect();
        body = format!("{stripped}checksum {:016x}\n", fnv1a64(stripped.as_bytes()));
        fs::write(&path, body).unwrap();

        assert!(matches!(
            Gallery::load(dir.path()),
            Err(GalleryError::VersionMismatch { found }) if found.ends_with("-9")
        ));
    }
}
