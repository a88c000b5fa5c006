//! Face engine boundary (detect, compare) and similarity-threshold face
//! grouping.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use chrono::{DateTime, Utc};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::backend::BackendError;
use crate::corpus::Post;
use crate::rng::keyed_rng;

#[derive(Debug, thiserror::Error)]
pub enum FaceError {
    #[error("similarity threshold must lie in (0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("annotation file line {line}: {message}")]
    AnnotationFile { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Male, Gender::Female];

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Race {
    Asian,
    AfricanAmerican,
    Caucasian,
}

impl Race {
    pub const ALL: [Race; 3] = [Race::Asian, Race::AfricanAmerican, Race::Caucasian];

    pub fn as_str(self) -> &'static str {
        match self {
            Race::Asian => "asian",
            Race::AfricanAmerican => "african_american",
            Race::Caucasian => "caucasian",
        }
    }
}

macro_rules! display_via_as_str {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    )*};
}
display_via_as_str!(Gender, Race);

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" => Ok(Gender::Male),
            "female" => Ok(Gender::Female),
            other => Err(format!("unknown gender {other:?}")),
        }
    }
}

impl FromStr for Race {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace([' ', '-'], "_").as_str() {
            "asian" => Ok(Race::Asian),
            "african_american" | "black" => Ok(Race::AfricanAmerican),
            "caucasian" | "white" => Ok(Race::Caucasian),
            other => Err(format!("unknown race {other:?}")),
        }
    }
}

/// Pixel bounding box `(x, y, w, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }
}

/// A face as reported by a backend, before it is tied to a post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedFace {
    /// Backend comparison handle.
    pub token: String,
    pub bbox: BBox,
    pub age: f64,
    pub gender: Gender,
    pub race: Race,
    pub smiling: f64,
}

impl DetectedFace {
    pub fn validate(&self) -> Result<(), BackendError> {
        if !(0.0..=100.0).contains(&self.smiling) {
            return Err(BackendError::Protocol(format!("smiling {} outside [0, 100]", self.smiling)));
        }
        if !(self.age.is_finite() && self.age >= 0.0) {
            return Err(BackendError::Protocol(format!("invalid age {}", self.age)));
        }
        if self.bbox.w == 0 || self.bbox.h == 0 {
            return Err(BackendError::Protocol("empty bounding box".into()));
        }
        Ok(())
    }
}

/// A detected face with its post context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceObservation {
    pub face_id: String,
    pub post_id: String,
    pub timestamp: DateTime<Utc>,
    pub bbox: BBox,
    pub age: f64,
    pub gender: Gender,
    pub race: Race,
    /// Smile confidence in `[0, 100]`.
    pub smiling: f64,
    pub token: String,
}

impl FaceObservation {
    pub fn export_record(&self) -> FaceExportRecord {
        FaceExportRecord {
            face_id: self.face_id.clone(),
            post_id: self.post_id.clone(),
            bbox: self.bbox,
            age: self.age,
            gender: self.gender,
            race: self.race,
            smiling: self.smiling,
        }
    }
}

/// One line of the face-library export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceExportRecord {
    pub face_id: String,
    pub post_id: String,
    pub bbox: BBox,
    pub age: f64,
    pub gender: Gender,
    pub race: Race,
    pub smiling: f64,
}

pub trait FaceEngine: Send + Sync {
    fn detect(&self, image_ref: &str) -> Result<Vec<DetectedFace>, BackendError>;

    /// Similarity in `[0, 1]` between two faces identified by their tokens.
    fn compare(&self, token_a: &str, token_b: &str) -> Result<f64, BackendError>;
}

impl<T: FaceEngine + ?Sized> FaceEngine for &T {
    fn detect(&self, image_ref: &str) -> Result<Vec<DetectedFace>, BackendError> {
        (**self).detect(image_ref)
    }

    fn compare(&self, a: &str, b: &str) -> Result<f64, BackendError> {
        (**self).compare(a, b)
    }
}

impl<T: FaceEngine + ?Sized> FaceEngine for Box<T> {
    fn detect(&self, image_ref: &str) -> Result<Vec<DetectedFace>, BackendError> {
        (**self).detect(image_ref)
    }

    fn compare(&self, a: &str, b: &str) -> Result<f64, BackendError> {
        (**self).compare(a, b)
    }
}

/// Detects faces in a post's image and attaches the post context.
/// Face ids are `<post_id>#<index>`.
pub fn detect_faces(post: &Post, engine: &dyn FaceEngine) -> Result<Vec<FaceObservation>, BackendError> {
    let faces = engine.detect(&post.image_ref)?;
    faces
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            f.validate()?;
            Ok(FaceObservation {
                face_id: format!("{}#{i}", post.post_id),
                post_id: post.post_id.clone(),
                timestamp: post.timestamp,
                bbox: f.bbox,
                age: f.age,
                gender: f.gender,
                race: f.race,
                smiling: f.smiling,
                token: f.token,
            })
        })
        .collect()
}

pub fn compare_faces(a: &FaceObservation, b: &FaceObservation, engine: &dyn FaceEngine) -> Result<f64, BackendError> {
    engine.compare(&a.token, &b.token)
}

/// Faces believed to belong to one individual, in timestamp order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceGroup {
    pub group_id: String,
    pub members: Vec<FaceObservation>,
    /// Comparison token standing in for the group (its founding face).
    pub representative: String,
}

impl FaceGroup {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn first_seen(&self) -> Option<DateTime<Utc>> {
        self.members.iter().map(|m| m.timestamp).min()
    }

    pub fn timestamps(&self) -> impl Iterator<Item = &DateTime<Utc>> {
        self.members.iter().map(|m| &m.timestamp)
    }
}

/// Size-descending order; ties go to the earlier first appearance.
pub fn group_rank_order(a: &FaceGroup, b: &FaceGroup) -> Ordering {
    b.len().cmp(&a.len()).then_with(|| a.first_seen().cmp(&b.first_seen()))
}

/// Greedy incremental clustering in timestamp order.
///
/// Each face is compared to every group's representative; it joins the most
/// similar group when that similarity reaches `tau` (earlier groups win exact
/// ties), otherwise it founds a new group. Output is sorted by descending
/// size, then first appearance, then founding order.
pub fn group_faces_by<F>(observations: &[FaceObservation], tau: f64, mut similarity: F) -> Result<Vec<FaceGroup>, FaceError>
where
    F: FnMut(&FaceObservation, &FaceObservation) -> Result<f64, BackendError>,
{
    if !(tau > 0.0 && tau < 1.0) {
        return Err(FaceError::InvalidThreshold(tau));
    }
    let mut order: Vec<usize> = (0..observations.len()).collect();
    order.sort_by_key(|&i| observations[i].timestamp);

    // (representative index, member indices)
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for &i in &order {
        let face = &observations[i];
        let mut best: Option<(usize, f64)> = None;
        for (g, (rep, _)) in groups.iter().enumerate() {
            let s = similarity(face, &observations[*rep])?;
            if best.is_none_or(|(_, bs)| s > bs) {
                best = Some((g, s));
            }
        }
        match best {
            Some((g, s)) if s >= tau => groups[g].1.push(i),
            _ => groups.push((i, vec![i])),
        }
    }

    let mut built: Vec<(usize, FaceGroup)> = groups
        .into_iter()
        .enumerate()
        .map(|(founded, (rep, members))| {
            let group = FaceGroup {
                group_id: String::new(),
                members: members.iter().map(|&m| observations[m].clone()).collect(),
                representative: observations[rep].token.clone(),
            };
            (founded, group)
        })
        .collect();
    built.sort_by(|(fa, a), (fb, b)| group_rank_order(a, b).then(fa.cmp(fb)));
    Ok(built
        .into_iter()
        .enumerate()
        .map(|(rank, (_, mut g))| {
            g.group_id = format!("g{rank}");
            g
        })
        .collect())
}

pub fn group_faces(observations: &[FaceObservation], tau: f64, engine: &dyn FaceEngine) -> Result<Vec<FaceGroup>, FaceError> {
    group_faces_by(observations, tau, |a, b| compare_faces(a, b, engine))
}

/// Grouping parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroupingConfig {
    pub tau: f64,
    /// Faces with a smaller bounding-box area are discarded; 0 keeps all.
    pub min_bbox_area: u64,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        Self { tau: 0.75, min_bbox_area: 0 }
    }
}

/// Annotated face in a mock annotation file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedFace {
    pub person_id: String,
    pub bbox: BBox,
    pub age: f64,
    pub gender: Gender,
    pub race: Race,
    pub smiling: f64,
}

/// One line of a mock annotation file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub image_ref: String,
    pub faces: Vec<AnnotatedFace>,
}

/// Face engine answering from ground-truth annotations.
///
/// Tokens are `<image_ref>#<index>`. Similarity is 1 for the same person and
/// 0 otherwise; with `sigma > 0` a Gaussian perturbation clipped to
/// `±3 sigma` is added, keyed on the unordered token pair so the result is
/// symmetric and reproducible.
#[derive(Debug, Default)]
pub struct MockFaceEngine {
    annotations: HashMap<String, Vec<AnnotatedFace>>,
    sigma: f64,
    seed: u64,
    missing: AtomicU64,
}

impl MockFaceEngine {
    pub fn new(records: impl IntoIterator<Item = AnnotationRecord>) -> Self {
        Self {
            annotations: records.into_iter().map(|r| (r.image_ref, r.faces)).collect(),
            ..Default::default()
        }
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, FaceError> {
        let mut records = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: AnnotationRecord = serde_json::from_str(&line)
                .map_err(|e| FaceError::AnnotationFile { line: n + 1, message: e.to_string() })?;
            records.push(rec);
        }
        Ok(Self::new(records))
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.sigma = sigma.max(0.0);
        self.seed = seed;
        self
    }

    /// Lookups for images absent from the annotations.
    pub fn missing_count(&self) -> u64 {
        self.missing.load(AtomicOrdering::Relaxed)
    }

    fn person(&self, token: &str) -> Result<&str, BackendError> {
        let (image, idx) = token
            .rsplit_once('#')
            .ok_or_else(|| BackendError::Protocol(format!("malformed face token {token:?}")))?;
        let idx: usize = idx.parse().map_err(|_| BackendError::Protocol(format!("malformed face token {token:?}")))?;
        self.annotations
            .get(image)
            .and_then(|faces| faces.get(idx))
            .map(|f| f.person_id.as_str())
            .ok_or_else(|| BackendError::Protocol(format!("unknown face token {token:?}")))
    }
}

impl FaceEngine for MockFaceEngine {
    fn detect(&self, image_ref: &str) -> Result<Vec<DetectedFace>, BackendError> {
        let Some(faces) = self.annotations.get(image_ref) else {
            self.missing.fetch_add(1, AtomicOrdering::Relaxed);
            return Ok(Vec::new());
        };
        Ok(faces
            .iter()
            .enumerate()
            .map(|(i, f)| DetectedFace {
                token: format!("{image_ref}#{i}"),
                bbox: f.bbox,
                age: f.age,
                gender: f.gender,
                race: f.race,
                smiling: f.smiling,
            })
            .collect())
    }

    fn compare(&self, a: &str, b: &str) -> Result<f64, BackendError> {
        let same = self.person(a)? == self.person(b)?;
        if a == b {
            return Ok(1.0);
        }
        let base = if same { 1.0 } else { 0.0 };
        if self.sigma == 0.0 {
            return Ok(base);
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let mut rng = keyed_rng(self.seed, &[b"compare", lo.as_bytes(), hi.as_bytes()]);
        let z: f64 = StandardNormal.sample(&mut rng);
        let noise = (z * self.sigma).clamp(-3.0 * self.sigma, 3.0 * self.sigma);
        Ok((base + noise).clamp(0.0, 1.0))
    }
}
