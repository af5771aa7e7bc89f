//! Visual materials, their pairwise structural dissimilarity, and the
//! feature triples a candidate ordering produces.

mod manifest;
mod ssim;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FeatureSequence, Step};
use crate::scalar::Scalar;

pub use manifest::{load_manifest, parse_manifest, Manifest, ScoreRanges, MANIFEST_VERSION};
pub use ssim::{dssim, ssim, GrayFrame, COMPARE_SIZE};

/// Display time of a still image in seconds.
pub const DEFAULT_IMAGE_DURATION_S: f64 = 1.5;
/// Additive aesthetics bonus for video clips.
pub const DEFAULT_INCENTIVE: f64 = 0.1;
/// Cap on frames used by frame-wise max/min aggregation.
pub const MAX_SAMPLED_FRAMES: usize = 16;
/// Side length of the fallback embedding grid.
pub const EMBED_GRID: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaterialKind {
    Image,
    Video,
}

/// One image or clip with its scores in `[0, 1]`.
///
/// `embeddings` holds one vector for an image and one per sampled frame (or a
/// single clip-level vector) for a video. It is empty until a
/// [`MaterialSet`] resolves it, falling back to [`fallback_embedding`].
#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub id: String,
    pub kind: MaterialKind,
    pub frames: Vec<String>,
    pub duration_s: f64,
    pub aesthetics: f64,
    pub arousal: f64,
    pub embeddings: Vec<Vec<f64>>,
}

impl Material {
    pub fn image(id: impl Into<String>, frame: impl Into<String>, aesthetics: f64, arousal: f64) -> Self {
        Self {
            id: id.into(),
            kind: MaterialKind::Image,
            frames: vec![frame.into()],
            duration_s: DEFAULT_IMAGE_DURATION_S,
            aesthetics,
            arousal,
            embeddings: Vec::new(),
        }
    }

    pub fn video(
        id: impl Into<String>,
        frames: Vec<String>,
        duration_s: f64,
        aesthetics: f64,
        arousal: f64,
    ) -> Self {
        Self {
            id: id.into(),
            kind: MaterialKind::Video,
            frames,
            duration_s,
            aesthetics,
            arousal,
            embeddings: Vec::new(),
        }
    }

    pub fn with_embeddings(mut self, embeddings: Vec<Vec<f64>>) -> Self {
        self.embeddings = embeddings;
        self
    }

    pub fn is_video(&self) -> bool {
        self.kind == MaterialKind::Video
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |detail: String| Error::Input {
            id: self.id.clone(),
            detail,
        };
        if self.id.is_empty() {
            return Err(Error::usage("material id must not be empty"));
        }
        match self.kind {
            MaterialKind::Image if self.frames.len() != 1 => {
                return Err(bad(format!("image needs exactly 1 frame, has {}", self.frames.len())))
            }
            MaterialKind::Video if self.frames.is_empty() => {
                return Err(bad("video needs at least 1 frame".into()))
            }
            _ => {}
        }
        for (name, v) in [("aesthetics", self.aesthetics), ("arousal", self.arousal)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(bad(format!("{name} {v} outside [0, 1]")));
            }
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(bad(format!("duration {} must be positive", self.duration_s)));
        }
        if self.kind == MaterialKind::Image && self.embeddings.len() > 1 {
            return Err(bad("image carries more than one embedding".into()));
        }
        Ok(())
    }

    /// Frame indices used for aggregation: all of them up to the cap,
    /// otherwise evenly spaced including first and last.
    pub fn sampled_frames(&self) -> Vec<usize> {
        sample_indices(self.frames.len())
    }
}

pub(crate) fn sample_indices(n: usize) -> Vec<usize> {
    if n <= MAX_SAMPLED_FRAMES {
        (0..n).collect()
    } else {
        (0..MAX_SAMPLED_FRAMES)
            .map(|i| i * (n - 1) / (MAX_SAMPLED_FRAMES - 1))
            .collect()
    }
}

/// Supplies comparison-size frames by reference string.
pub trait FrameSource: Sync {
    fn frame(&self, reference: &str) -> Result<Arc<GrayFrame>>;
}

/// Decodes frames from disk relative to a base directory, resamples them to
/// [`COMPARE_SIZE`] and caches them. Frames can also be inserted directly.
#[derive(Debug, Default)]
pub struct FrameStore {
    base: PathBuf,
    cache: Mutex<HashMap<String, Arc<GrayFrame>>>,
}

impl FrameStore {
    pub fn new(base: impl Into<PathBuf>) -> Self {
        Self {
            base: base.into(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn insert(&self, reference: impl Into<String>, frame: GrayFrame) {
        let frame = frame.resized(COMPARE_SIZE, COMPARE_SIZE);
        self.cache
            .lock()
            .expect("frame cache poisoned")
            .insert(reference.into(), Arc::new(frame));
    }

    fn resolve(&self, reference: &str) -> PathBuf {
        let p = Path::new(reference);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }
}

impl FrameSource for FrameStore {
    fn frame(&self, reference: &str) -> Result<Arc<GrayFrame>> {
        if let Some(f) = self.cache.lock().expect("frame cache poisoned").get(reference) {
            return Ok(Arc::clone(f));
        }
        let decoded = GrayFrame::decode(&self.resolve(reference))?.resized(COMPARE_SIZE, COMPARE_SIZE);
        let decoded = Arc::new(decoded);
        self.cache
            .lock()
            .expect("frame cache poisoned")
            .entry(reference.to_string())
            .or_insert_with(|| Arc::clone(&decoded));
        Ok(decoded)
    }
}

fn material_frames(m: &Material, src: &dyn FrameSource) -> Result<Vec<Arc<GrayFrame>>> {
    m.sampled_frames()
        .into_iter()
        .map(|i| {
            src.frame(&m.frames[i]).map_err(|e| Error::Input {
                id: m.id.clone(),
                detail: e.to_string(),
            })
        })
        .collect()
}

/// Structural dissimilarity of two materials. When a video is involved the
/// result is the maximum over sampled frame pairs.
pub fn dissimilarity(a: &Material, b: &Material, src: &dyn FrameSource) -> Result<f64> {
    let fa = material_frames(a, src)?;
    let fb = material_frames(b, src)?;
    let mut worst: f64 = 0.0;
    for x in &fa {
        for y in &fb {
            let d = dssim(x, y).map_err(|e| Error::Input {
                id: format!("{}|{}", a.id, b.id),
                detail: e.to_string(),
            })?;
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

/// Symmetric, zero-diagonal matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DissimilarityMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::usage(format!(
                    "dissimilarity row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        let m = Self { n, data };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.n {
            if self.get(i, i) != 0.0 {
                return Err(Error::usage(format!("dissimilarity diagonal [{i}] is not zero")));
            }
            for j in 0..self.n {
                let v = self.get(i, j);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::usage(format!("dissimilarity [{i}][{j}] = {v} outside [0, 1]")));
                }
                if v != self.get(j, i) {
                    return Err(Error::usage(format!("dissimilarity [{i}][{j}] is not symmetric")));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }
}

/// Computes every unordered pair once (in parallel) and mirrors it.
pub fn dissimilarity_matrix(ms: &[Material], src: &dyn FrameSource) -> Result<DissimilarityMatrix> {
    if ms.is_empty() {
        return Err(Error::usage("dissimilarity matrix of no materials"));
    }
    let n = ms.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| dissimilarity(&ms[i], &ms[j], src))
        .collect::<Result<_>>()?;
    let mut data = vec![0.0; n * n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        data[i * n + j] = v;
        data[j * n + i] = v;
    }
    Ok(DissimilarityMatrix { n, data })
}

fn grid_embedding(frame: &GrayFrame) -> Vec<f64> {
    let (w, h) = (frame.width(), frame.height());
    let mut out = Vec::with_capacity(EMBED_GRID * EMBED_GRID);
    for gy in 0..EMBED_GRID {
        let (y0, y1) = (gy * h / EMBED_GRID, ((gy + 1) * h / EMBED_GRID).max(gy * h / EMBED_GRID + 1));
        for gx in 0..EMBED_GRID {
            let (x0, x1) = (gx * w / EMBED_GRID, ((gx + 1) * w / EMBED_GRID).max(gx * w / EMBED_GRID + 1));
            let mut sum = 0.0;
            for y in y0..y1.min(h) {
                for x in x0..x1.min(w) {
                    sum += frame.at(x, y);
                }
            }
            let count = ((y1.min(h) - y0) * (x1.min(w) - x0)) as f64;
            out.push(sum / count / 255.0);
        }
    }
    out
}

/// 8x8 block-mean thumbnail of the first frame, scaled to `[0, 1]`.
pub fn fallback_embedding(m: &Material, src: &dyn FrameSource) -> Result<Vec<f64>> {
    let first = m.frames.first().ok_or_else(|| Error::Input {
        id: m.id.clone(),
        detail: "no frames".into(),
    })?;
    let frame = src.frame(first).map_err(|e| Error::Input {
        id: m.id.clone(),
        detail: e.to_string(),
    })?;
    Ok(grid_embedding(&frame))
}

/// Fallback embeddings of every sampled frame.
fn fallback_frame_embeddings(m: &Material, src: &dyn FrameSource) -> Result<Vec<Vec<f64>>> {
    Ok(material_frames(m, src)?
        .iter()
        .map(|f| grid_embedding(f))
        .collect())
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distance between embeddings; with several frame embeddings on
/// either side, the minimum over all pairs.
pub fn clustering_distance(a: &Material, b: &Material) -> Result<f64> {
    if a.embeddings.is_empty() || b.embeddings.is_empty() {
        return Err(Error::usage(format!(
            "missing embedding for `{}` or `{}`",
            a.id, b.id
        )));
    }
    let dim = a.embeddings[0].len();
    if a.embeddings.iter().chain(&b.embeddings).any(|e| e.len() != dim) {
        return Err(Error::usage(format!(
            "embedding dimensions of `{}` and `{}` differ",
            a.id, b.id
        )));
    }
    let mut best = f64::INFINITY;
    for x in &a.embeddings {
        for y in &b.embeddings {
            best = best.min(euclidean(x, y));
        }
    }
    Ok(best)
}

/// Point used for centroid updates: the embedding itself, or the mean of a
/// video's frame embeddings.
pub fn representative(m: &Material) -> Vec<f64> {
    let n = m.embeddings.len().max(1) as f64;
    let dim = m.embeddings.first().map_or(0, Vec::len);
    let mut out = vec![0.0; dim];
    for e in &m.embeddings {
        for (o, v) in out.iter_mut().zip(e) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|v| *v /= n);
    out
}

/// Validated materials with their dissimilarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialSet {
    materials: Vec<Material>,
    dissim: DissimilarityMatrix,
    index: HashMap<String, usize>,
}

impl MaterialSet {
    /// Assembles a set from fully resolved parts.
    pub fn new(materials: Vec<Material>, dissim: DissimilarityMatrix) -> Result<Self> {
        if materials.is_empty() {
            return Err(Error::usage("material set must not be empty"));
        }
        let mut index = HashMap::with_capacity(materials.len());
        for (i, m) in materials.iter().enumerate() {
            m.validate()?;
            if index.insert(m.id.clone(), i).is_some() {
                return Err(Error::usage(format!("duplicate material id `{}`", m.id)));
            }
        }
        if dissim.len() != materials.len() {
            return Err(Error::usage(format!(
                "dissimilarity matrix is {0}x{0} for {1} materials",
                dissim.len(),
                materials.len()
            )));
        }
        let dim = materials[0].embeddings.first().map(Vec::len);
        for m in &materials {
            if m.embeddings.is_empty() {
                return Err(Error::Input {
                    id: m.id.clone(),
                    detail: "embedding not resolved".into(),
                });
            }
            if m.embeddings.iter().any(|e| Some(e.len()) != dim || e.is_empty()) {
                return Err(Error::Input {
                    id: m.id.clone(),
                    detail: format!("embedding dimension differs from {}", dim.unwrap_or(0)),
                });
            }
        }
        Ok(Self {
            materials,
            dissim,
            index,
        })
    }

    /// Resolves missing embeddings with the fallback embedder and computes the
    /// dissimilarity matrix unless `dissim` overrides it.
    pub fn build(
        mut materials: Vec<Material>,
        src: &dyn FrameSource,
        dissim: Option<DissimilarityMatrix>,
    ) -> Result<Self> {
        for m in &materials {
            m.validate()?;
        }
        for m in materials.iter_mut() {
            if m.embeddings.is_empty() {
                m.embeddings = match m.kind {
                    MaterialKind::Image => vec![fallback_embedding(m, src)?],
                    MaterialKind::Video => fallback_frame_embeddings(m, src)?,
                };
            }
        }
        let dissim = match dissim {
            Some(d) => d,
            None => dissimilarity_matrix(&materials, src)?,
        };
        Self::new(materials, dissim)
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }

    pub fn dissim(&self) -> &DissimilarityMatrix {
        &self.dissim
    }

    pub fn get(&self, i: usize) -> &Material {
        &self.materials[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Aesthetics and arousal of material `i` as seen by the model.
    pub fn step_scores(&self, i: usize, incentive: f64) -> (f64, f64) {
        let m = &self.materials[i];
        let a = if m.is_video() {
            (m.aesthetics + incentive).clamp(0.0, 1.0 + incentive)
        } else {
            m.aesthetics
        };
        (a, m.arousal)
    }

    /// Feature triple of placing material `i` after `prev`.
    pub fn step<T: Scalar>(&self, prev: Option<usize>, i: usize, incentive: f64) -> Step<T> {
        let d = prev.map_or(1.0, |p| self.dissim.get(p, i));
        let (a, e) = self.step_scores(i, incentive);
        Step::new(T::lit(d), T::lit(a), T::lit(e))
    }

    pub fn resolve_ids<S: AsRef<str>>(&self, order: &[S]) -> Result<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        order
            .iter()
            .map(|id| {
                let id = id.as_ref();
                let i = self
                    .index_of(id)
                    .ok_or_else(|| Error::usage(format!("unknown material id `{id}`")))?;
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::usage(format!("material id `{id}` repeated")));
                }
                Ok(i)
            })
            .collect()
    }

    /// Feature sequence of an ordering given by material indices.
    pub fn features_by_index<T: Scalar>(&self, order: &[usize], incentive: f64) -> Result<FeatureSequence<T>> {
        let steps = order
            .iter()
            .enumerate()
            .map(|(pos, &i)| self.step(pos.checked_sub(1).map(|p| order[p]), i, incentive))
            .collect();
        FeatureSequence::new(steps, T::lit(incentive))
    }
}

/// Feature triples of an ordering: the first step has dissimilarity 1, later
/// steps the dissimilarity to their predecessor; videos get `incentive` added
/// to aesthetics.
pub fn sequence_features<T: Scalar, S: AsRef<str>>(
    order: &[S],
    set: &MaterialSet,
    incentive: f64,
) -> Result<FeatureSequence<T>> {
    if !(incentive >= 0.0 && incentive.is_finite()) {
        return Err(Error::usage(format!("incentive {incentive} must be non-negative")));
    }
    let idx = set.resolve_ids(order)?;
    set.features_by_index(&idx, incentive)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store_with(frames: &[(&str, GrayFrame)]) -> FrameStore {
        let s = FrameStore::default();
        for (name, f) in frames {
            s.insert(*name, f.clone());
        }
        s
    }

    fn pattern(seed: usize) -> GrayFrame {
        GrayFrame::from_fn(32, 32, move |x, y| ((x * 7 + y * 13 + seed * 31) % 256) as f64)
    }

    #[test]
    fn identity_dissimilarity_is_zero() {
        let src = store_with(&[("a.png", pattern(1))]);
        let m = Material::image("a", "a.png", 0.5, 0.5);
        assert_eq!(dissimilarity(&m, &m, &src).unwrap(), 0.0);
    }

    #[test]
    fn video_takes_frame_maximum() {
        let src = store_with(&[("f0", pattern(1)), ("f1", pattern(2)), ("f2", pattern(3))]);
        let img = Material::image("img", "f0", 0.5, 0.5);
        let vid = Material::video("vid", vec!["f0".into(), "f1".into(), "f2".into()], 3.0, 0.5, 0.5);
        let f0 = src.frame("f0").unwrap();
        let brute = ["f1", "f2"]
            .iter()
            .map(|r| dssim(&src.frame(r).unwrap(), &f0).unwrap())
            .fold(0.0f64, f64::max);
        assert_eq!(dissimilarity(&vid, &img, &src).unwrap(), brute);
        assert_eq!(dissimilarity(&img, &vid, &src).unwrap(), brute);
    }

    #[test]
    fn sampling_caps_frames() {
        assert_eq!(sample_indices(3), vec![0, 1, 2]);
        let s = sample_indices(100);
        assert_eq!(s.len(), MAX_SAMPLED_FRAMES);
        assert_eq!((s[0], s[15]), (0, 99));
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn fallback_embedding_of_constant_image() {
        let src = store_with(&[("c", GrayFrame::filled(50, 40, 128.0))]);
        let e = fallback_embedding(&Material::image("c", "c", 0.0, 0.0), &src).unwrap();
        assert_eq!(e.len(), 64);
        assert!(e.iter().all(|v| (v - 128.0 / 255.0).abs() < 1e-12));
    }

    #[test]
    fn fallback_embedding_distinguishes_structure() {
        let src = store_with(&[("a", pattern(1)), ("b", GrayFrame::filled(32, 32, 10.0))]);
        let ea = fallback_embedding(&Material::image("a", "a", 0.0, 0.0), &src).unwrap();
        let ea2 = fallback_embedding(&Material::image("a2", "a", 0.0, 0.0), &src).unwrap();
        let eb = fallback_embedding(&Material::image("b", "b", 0.0, 0.0), &src).unwrap();
        assert_eq!(ea, ea2);
        assert!(euclidean(&ea, &eb) > 0.0);
    }

    #[test]
    fn clustering_distance_rules() {
        let a = Material::image("a", "x", 0.0, 0.0).with_embeddings(vec![vec![0.0, 1.0]]);
        let b = Material::image("b", "y", 0.0, 0.0).with_embeddings(vec![vec![3.0, 5.0]]);
        assert_eq!(clustering_distance(&a, &b).unwrap(), 5.0);
        assert_eq!(clustering_distance(&a, &a).unwrap(), 0.0);
        let v = Material::video("v", vec!["p".into(), "q".into()], 2.0, 0.0, 0.0)
            .with_embeddings(vec![vec![9.0, 9.0], vec![0.0, 1.0]]);
        assert_eq!(clustering_distance(&v, &a).unwrap(), 0.0);
        let c = Material::image("c", "z", 0.0, 0.0).with_embeddings(vec![vec![1.0]]);
        assert!(matches!(clustering_distance(&a, &c), Err(Error::Usage(_))));
        assert_eq!(representative(&v), vec![4.5, 5.0]);
    }

    fn small_set() -> MaterialSet {
        let src = store_with(&[("p1", pattern(1)), ("p2", pattern(2)), ("v0", pattern(5))]);
        let ms = vec![
            Material::image("a", "p1", 0.3, 0.4),
            Material::image("b", "p1", 0.5, 0.1),
            Material::image("c", "p2", 0.9, 0.9),
            Material::video("v", vec!["v0".into(), "p2".into()], 4.0, 0.62, 0.2),
        ];
        MaterialSet::build(ms, &src, None).unwrap()
    }

    #[test]
    fn sequence_feature_conventions() {
        let set = small_set();
        let one: FeatureSequence<f64> = sequence_features(&["a"], &set, 0.1).unwrap();
        assert_eq!(one.steps(), &[Step::new(1.0, 0.3, 0.4)]);
        let twins: FeatureSequence<f64> = sequence_features(&["a", "b"], &set, 0.1).unwrap();
        assert_eq!(twins.steps()[1].d, 0.0);
        let vid: FeatureSequence<f64> = sequence_features(&["v"], &set, 0.1).unwrap();
        assert!((vid.steps()[0].a - 0.72).abs() < 1e-15);
        assert!(sequence_features::<f64, _>(&["a", "a"], &set, 0.1).is_err());
        assert!(sequence_features::<f64, _>(&["zz"], &set, 0.1).is_err());
        assert!(sequence_features::<f64, _>(&["a"], &set, -0.1).is_err());
    }

    #[test]
    fn reversing_changes_only_dissimilarity_column() {
        let set = small_set();
        let fwd: FeatureSequence<f64> = sequence_features(&["a", "c", "v"], &set, 0.1).unwrap();
        let rev: FeatureSequence<f64> = sequence_features(&["v", "c", "a"], &set, 0.1).unwrap();
        for ch in [1, 2] {
            let mut f = fwd.column(ch);
            f.reverse();
            assert_eq!(f, rev.column(ch));
        }
        assert_eq!(rev.len(), 3);
    }

    #[test]
    fn matrix_matches_pairwise_and_validates() {
        let src = store_with(&[("p1", pattern(1)), ("p2", pattern(2)), ("p3", pattern(9))]);
        let ms = vec![
            Material::image("a", "p1", 0.3, 0.4),
            Material::image("b", "p2", 0.5, 0.1),
            Material::image("c", "p3", 0.5, 0.1),
        ];
        let m = dissimilarity_matrix(&ms, &src).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.0 } else { dissimilarity(&ms[i], &ms[j], &src).unwrap() };
                assert_eq!(m.get(i, j), expect);
            }
        }
        let single = dissimilarity_matrix(&ms[..1], &src).unwrap();
        assert_eq!(single.rows(), vec![vec![0.0]]);
        assert!(DissimilarityMatrix::from_rows(vec![vec![0.0, 0.2], vec![0.3, 0.0]]).is_err());
        assert!(DissimilarityMatrix::from_rows(vec![vec![0.1]]).is_err());
        assert!(DissimilarityMatrix::from_rows(vec![vec![0.0, 1.2], vec![1.2, 0.0]]).is_err());
        assert!(DissimilarityMatrix::from_rows(vec![vec![0.0, 0.2]]).is_err());
    }

    #[test]
    fn set_validation() {
        let src = store_with(&[("p1", pattern(1))]);
        let dup = vec![Material::image("a", "p1", 0.3, 0.4), Material::image("a", "p1", 0.3, 0.4)];
        assert!(MaterialSet::build(dup, &src, None).is_err());
        let bad = vec![Material::image("a", "p1", 1.3, 0.4)];
        assert!(MaterialSet::build(bad, &src, None).is_err());
        let missing = vec![Material::image("a", "nope.png", 0.3, 0.4)];
        match MaterialSet::build(missing, &src, None) {
            Err(Error::Input { id, .. }) => assert_eq!(id, "a"),
            other => panic!("{other:?}"),
        }
    }
}
