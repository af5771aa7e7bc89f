//! `wbp-manifest-v1` JSON documents.
//!
//! ```json
//! {
//!   "version": "wbp-manifest-v1",
//!   "score_ranges": { "aesthetics": [1, 10] },
//!   "incentive": 0.1,
//!   "materials": [
//!     { "id": "front", "kind": "image", "frames": ["front.png"],
//!       "aesthetics": 7.2, "arousal": 0.4 },
//!     { "id": "spin", "kind": "video", "frames": ["s0.png", "s1.png"],
//!       "duration_s": 4.0, "frame_aesthetics": [6.0, 8.5], "arousal": 0.7 }
//!   ],
//!   "dissimilarity": [[0, 0.4], [0.4, 0]]
//! }
//! ```
//!
//! Frame paths are relative to the manifest's directory. A video without a
//! clip-level score takes the maximum of its per-frame scores.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DissimilarityMatrix, FrameSource, FrameStore, Material, MaterialKind, MaterialSet, DEFAULT_IMAGE_DURATION_S};
use crate::error::{Error, Result};

pub const MANIFEST_VERSION: &str = "wbp-manifest-v1";

/// Source ranges of raw scores, rescaled linearly onto `[0, 1]` at load.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRanges {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aesthetics: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arousal: Option<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestDoc {
    version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score_ranges: Option<ScoreRanges>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    incentive: Option<f64>,
    materials: Vec<MaterialDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dissimilarity: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialDoc {
    id: String,
    kind: MaterialKind,
    frames: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    aesthetics: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arousal: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frame_aesthetics: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frame_arousal: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frame_embeddings: Option<Vec<Vec<f64>>>,
}

/// A loaded manifest: the material set plus header settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub set: MaterialSet,
    pub incentive: Option<f64>,
}

impl Manifest {
    /// Serializes back to a manifest that reloads to the same set. Scores are
    /// written already normalized; embeddings and the matrix are written out
    /// so no frame needs decoding on reload.
    pub fn to_json(&self) -> String {
        let materials = self
            .set
            .materials()
            .iter()
            .map(|m| {
                let (embedding, frame_embeddings) = match m.kind {
                    MaterialKind::Image => (m.embeddings.first().cloned(), None),
                    MaterialKind::Video => (None, Some(m.embeddings.clone())),
                };
                MaterialDoc {
                    id: m.id.clone(),
                    kind: m.kind,
                    frames: m.frames.clone(),
                    duration_s: Some(m.duration_s),
                    aesthetics: Some(m.aesthetics),
                    arousal: Some(m.arousal),
                    frame_aesthetics: None,
                    frame_arousal: None,
                    embedding,
                    frame_embeddings,
                }
            })
            .collect();
        let doc = ManifestDoc {
            version: MANIFEST_VERSION.to_string(),
            score_ranges: None,
            incentive: self.incentive,
            materials,
            dissimilarity: Some(self.set.dissim().rows()),
        };
        serde_json::to_string_pretty(&doc).expect("manifest serializes")
    }
}

fn rescale(v: f64, range: Option<[f64; 2]>, path: &str) -> Result<f64> {
    let out = match range {
        Some([lo, hi]) => {
            if !(hi > lo) {
                return Err(Error::load(path, format!("empty source range [{lo}, {hi}]")));
            }
            (v - lo) / (hi - lo)
        }
        None => v,
    };
    if !(0.0..=1.0).contains(&out) {
        let hint = if range.is_some() {
            format!("{v} falls outside the declared source range")
        } else {
            format!("{v} outside [0, 1] and no source range declared")
        };
        return Err(Error::load(path, hint));
    }
    Ok(out)
}

fn score(
    clip: Option<f64>,
    frames: Option<&Vec<f64>>,
    range: Option<[f64; 2]>,
    path: &str,
    kind: MaterialKind,
) -> Result<f64> {
    if let Some(v) = clip {
        return rescale(v, range, path);
    }
    match (kind, frames) {
        (MaterialKind::Video, Some(fs)) if !fs.is_empty() => {
            let mut best = f64::NEG_INFINITY;
            for (i, v) in fs.iter().enumerate() {
                best = best.max(rescale(*v, range, &format!("{path}[{i}]"))?);
            }
            Ok(best)
        }
        _ => Err(Error::load(path, "missing score")),
    }
}

fn material_from_doc(doc: MaterialDoc, ranges: &ScoreRanges, at: &str) -> Result<Material> {
    let field = |name: &str| format!("{at}.{name}");
    if doc.id.is_empty() {
        return Err(Error::load(field("id"), "empty id"));
    }
    match doc.kind {
        MaterialKind::Image if doc.frames.len() != 1 => {
            return Err(Error::load(field("frames"), "an image needs exactly one frame"))
        }
        MaterialKind::Video if doc.frames.is_empty() => {
            return Err(Error::load(field("frames"), "a video needs at least one frame"))
        }
        _ => {}
    }
    let fa = "frame_aesthetics";
    let fe = "frame_arousal";
    for (name, list) in [(fa, &doc.frame_aesthetics), (fe, &doc.frame_arousal)] {
        if let Some(l) = list {
            if doc.kind == MaterialKind::Image {
                return Err(Error::load(field(name), "per-frame scores only apply to videos"));
            }
            if l.len() != doc.frames.len() {
                return Err(Error::load(field(name), "length differs from frames"));
            }
        }
    }
    let aesthetics = score(doc.aesthetics, doc.frame_aesthetics.as_ref(), ranges.aesthetics, &field("aesthetics"), doc.kind)?;
    let arousal = score(doc.arousal, doc.frame_arousal.as_ref(), ranges.arousal, &field("arousal"), doc.kind)?;
    let duration_s = match (doc.kind, doc.duration_s) {
        (_, Some(d)) if d > 0.0 && d.is_finite() => d,
        (_, Some(d)) => return Err(Error::load(field("duration_s"), format!("{d} must be positive"))),
        (MaterialKind::Image, None) => DEFAULT_IMAGE_DURATION_S,
        (MaterialKind::Video, None) => {
            return Err(Error::load(field("duration_s"), "a video needs its native duration"))
        }
    };
    let embeddings = match (doc.kind, doc.embedding, doc.frame_embeddings) {
        (_, Some(_), Some(_)) => {
            return Err(Error::load(field("embedding"), "give either embedding or frame_embeddings"))
        }
        (MaterialKind::Image, None, Some(_)) => {
            return Err(Error::load(field("frame_embeddings"), "images take a single embedding"))
        }
        (_, Some(e), None) => vec![e],
        (_, None, Some(fe)) if fe.is_empty() => {
            return Err(Error::load(field("frame_embeddings"), "empty list"))
        }
        (_, None, Some(fe)) => fe,
        (_, None, None) => Vec::new(),
    };
    for (i, e) in embeddings.iter().enumerate() {
        if e.is_empty() || e.iter().any(|v| !v.is_finite()) {
            return Err(Error::load(format!("{at}.embedding[{i}]"), "empty or non-finite embedding"));
        }
    }
    Ok(Material {
        id: doc.id,
        kind: doc.kind,
        frames: doc.frames,
        duration_s,
        aesthetics,
        arousal,
        embeddings,
    })
}

/// Parses and validates manifest text, decoding frames through `src` only
/// where embeddings or dissimilarities are not supplied.
pub fn parse_manifest(text: &str, src: &dyn FrameSource) -> Result<Manifest> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ManifestDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::load(path, e.into_inner().to_string())
    })?;
    if doc.version != MANIFEST_VERSION {
        return Err(Error::load(
            "version",
            format!("expected `{MANIFEST_VERSION}`, found `{}`", doc.version),
        ));
    }
    if let Some(inc) = doc.incentive {
        if !(inc >= 0.0 && inc.is_finite()) {
            return Err(Error::load("incentive", format!("{inc} must be non-negative")));
        }
    }
    if doc.materials.is_empty() {
        return Err(Error::load("materials", "no materials"));
    }
    let ranges = doc.score_ranges.unwrap_or_default();
    let mut seen = std::collections::HashSet::new();
    let mut materials = Vec::with_capacity(doc.materials.len());
    for (i, m) in doc.materials.into_iter().enumerate() {
        let at = format!("materials[{i}]");
        if !seen.insert(m.id.clone()) {
            return Err(Error::load(format!("{at}.id"), format!("duplicate id `{}`", m.id)));
        }
        materials.push(material_from_doc(m, &ranges, &at)?);
    }
    let dissim = match doc.dissimilarity {
        Some(rows) => {
            if rows.len() != materials.len() {
                return Err(Error::load(
                    "dissimilarity",
                    format!("{} rows for {} materials", rows.len(), materials.len()),
                ));
            }
            Some(DissimilarityMatrix::from_rows(rows).map_err(|e| Error::load("dissimilarity", e.to_string()))?)
        }
        None => None,
    };
    let set = MaterialSet::build(materials, src, dissim).map_err(|e| match e {
        Error::Usage(d) => Error::load("materials", d),
        other => other,
    })?;
    Ok(Manifest {
        set,
        incentive: doc.incentive,
    })
}

/// Loads a manifest file; frame paths resolve against its directory.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::load(path.display().to_string(), e.to_string()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_manifest(&text, &FrameStore::new(base))
}
