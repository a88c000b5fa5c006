//! Pet-content classification behind a pluggable backend, the backend
//! validation harness, and the calendar-week pet-owner rule.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::backend::{bounded_map, BackendError};
use crate::corpus::{week_windows, Timeline, WindowId};
use crate::rng::unit_hash;

#[derive(Debug, thiserror::Error)]
pub enum PetClassError {
    #[error("no prediction for post {0}")]
    MissingPrediction(String),
    #[error("labeled set is empty")]
    EmptyLabeledSet,
    #[error("invalid prediction scores: {0}")]
    InvalidScores(String),
    #[error("invalid noise matrix: {0}")]
    InvalidNoise(String),
    #[error("label file line {line}: {message}")]
    LabelFile { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PetLabel {
    Dog,
    Cat,
    Other,
}

impl PetLabel {
    pub const ALL: [PetLabel; 3] = [PetLabel::Dog, PetLabel::Cat, PetLabel::Other];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PetLabel::Dog => "dog",
            PetLabel::Cat => "cat",
            PetLabel::Other => "other",
        }
    }
}

impl fmt::Display for PetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PetLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dog" => Ok(PetLabel::Dog),
            "cat" => Ok(PetLabel::Cat),
            "other" | "others" => Ok(PetLabel::Other),
            other => Err(format!("unknown pet label {other:?}")),
        }
    }
}

/// Three-way class probabilities summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PetPrediction {
    pub dog: f64,
    pub cat: f64,
    pub other: f64,
}

impl PetPrediction {
    /// Normalizes non-negative scores to probabilities.
    pub fn from_scores(dog: f64, cat: f64, other: f64) -> Result<Self, PetClassError> {
        let all = [dog, cat, other];
        if all.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(PetClassError::InvalidScores(format!("{all:?}")));
        }
        let total: f64 = all.iter().sum();
        if total <= 0.0 {
            return Err(PetClassError::InvalidScores("scores sum to zero".into()));
        }
        Ok(Self { dog: dog / total, cat: cat / total, other: other / total })
    }

    pub fn certain(label: PetLabel) -> Self {
        let mut p = [0.0; 3];
        p[label.index()] = 1.0;
        Self { dog: p[0], cat: p[1], other: p[2] }
    }

    pub fn probabilities(&self) -> [f64; 3] {
        [self.dog, self.cat, self.other]
    }

    /// Highest-probability class; exact ties resolve dog, cat, other.
    pub fn argmax(&self) -> PetLabel {
        let p = self.probabilities();
        let mut best = 0;
        for i in 1..3 {
            if p[i] > p[best] {
                best = i;
            }
        }
        PetLabel::ALL[best]
    }

    /// Argmax label, demoted to `Other` when a pet class falls short of
    /// `threshold`.
    pub fn label(&self, threshold: Option<f64>) -> PetLabel {
        let label = self.argmax();
        match threshold {
            Some(t) if label != PetLabel::Other && self.probabilities()[label.index()] < t => PetLabel::Other,
            _ => label,
        }
    }
}

/// Anything that can score an image reference.
pub trait PetClassifier: Send + Sync {
    fn classify(&self, image_ref: &str) -> Result<PetPrediction, BackendError>;
}

impl<T: PetClassifier + ?Sized> PetClassifier for &T {
    fn classify(&self, image_ref: &str) -> Result<PetPrediction, BackendError> {
        (**self).classify(image_ref)
    }
}

impl<T: PetClassifier + ?Sized> PetClassifier for Box<T> {
    fn classify(&self, image_ref: &str) -> Result<PetPrediction, BackendError> {
        (**self).classify(image_ref)
    }
}

pub fn classify_image(image_ref: &str, backend: &dyn PetClassifier) -> Result<PetPrediction, BackendError> {
    backend.classify(image_ref)
}

/// Classifies many images with at most `max_in_flight` concurrent calls.
pub fn classify_images<S: AsRef<str> + Sync>(
    image_refs: &[S],
    backend: &dyn PetClassifier,
    max_in_flight: usize,
) -> Vec<Result<PetPrediction, BackendError>> {
    bounded_map(image_refs, max_in_flight, |r| backend.classify(r.as_ref()))
}

/// Row-stochastic `true -> predicted` confusion probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseMatrix(pub [[f64; 3]; 3]);

impl NoiseMatrix {
    /// Per-class accuracies 99.0% (dog), 96.4% (cat), 98.5% (other), with
    /// the error mass split evenly across the two wrong classes.
    pub fn reference_classifier() -> Self {
        Self([[0.990, 0.005, 0.005], [0.018, 0.964, 0.018], [0.0075, 0.0075, 0.985]])
    }

    pub fn identity() -> Self {
        Self([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn validate(&self) -> Result<(), PetClassError> {
        for (i, row) in self.0.iter().enumerate() {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(PetClassError::InvalidNoise(format!("row {i} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(PetClassError::InvalidNoise(format!("row {i} sums to {sum}")));
            }
        }
        Ok(())
    }

    fn draw(&self, truth: PetLabel, u: f64) -> PetLabel {
        let row = self.0[truth.index()];
        let mut acc = 0.0;
        for (i, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return PetLabel::ALL[i];
            }
        }
        // u within rounding of 1.0: last class with nonzero mass
        PetLabel::ALL[row.iter().rposition(|p| *p > 0.0).unwrap_or(2)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierNoise {
    pub matrix: NoiseMatrix,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub image_ref: String,
    pub label: PetLabel,
}

/// Mock classifier driven by a sidecar `image_ref -> true label` map.
///
/// Without noise it returns one-hot predictions of the true label. With a
/// noise matrix the predicted label is drawn from the true label's row,
/// keyed on `(seed, image_ref)` so repeated calls agree.
#[derive(Debug, Default)]
pub struct MockClassifier {
    labels: HashMap<String, PetLabel>,
    noise: Option<ClassifierNoise>,
    unknown: AtomicU64,
}

impl MockClassifier {
    pub fn new(labels: HashMap<String, PetLabel>) -> Self {
        Self { labels, noise: None, unknown: AtomicU64::new(0) }
    }

    pub fn from_records(records: impl IntoIterator<Item = LabelRecord>) -> Self {
        Self::new(records.into_iter().map(|r| (r.image_ref, r.label)).collect())
    }

    /// Loads a newline-delimited `{"image_ref", "label"}` file.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, PetClassError> {
        let mut labels = HashMap::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: LabelRecord = serde_json::from_str(&line)
                .map_err(|e| PetClassError::LabelFile { line: n + 1, message: e.to_string() })?;
            labels.insert(rec.image_ref, rec.label);
        }
        Ok(Self::new(labels))
    }

    pub fn with_noise(mut self, noise: ClassifierNoise) -> Result<Self, PetClassError> {
        noise.matrix.validate()?;
        self.noise = Some(noise);
        Ok(self)
    }

    /// Number of lookups for image refs missing from the label map.
    pub fn unknown_count(&self) -> u64 {
        self.unknown.load(Ordering::Relaxed)
    }
}

impl PetClassifier for MockClassifier {
    fn classify(&self, image_ref: &str) -> Result<PetPrediction, BackendError> {
        let Some(&truth) = self.labels.get(image_ref) else {
            self.unknown.fetch_add(1, Ordering::Relaxed);
            log::warn!("mock classifier has no label for {image_ref}; treating as other");
            return Ok(PetPrediction::certain(PetLabel::Other));
        };
        let label = match &self.noise {
            None => truth,
            Some(noise) => noise.matrix.draw(truth, unit_hash(noise.seed, &[b"classify", image_ref.as_bytes()])),
        };
        Ok(PetPrediction::certain(label))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OwnershipLabel {
    DogOwner,
    CatOwner,
    None,
}

impl OwnershipLabel {
    pub fn is_owner(self) -> bool {
        self != OwnershipLabel::None
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OwnershipLabel::DogOwner => "dog_owner",
            OwnershipLabel::CatOwner => "cat_owner",
            OwnershipLabel::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Dog,
    Cat,
}

/// Parameters of the pet-owner rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OwnershipRule {
    /// Distinct ISO weeks with a same-species pet post needed to count as owner.
    pub min_windows: usize,
    /// Optional minimum class probability for a pet label; `None` is plain argmax.
    pub confidence_threshold: Option<f64>,
    /// Winner when both species qualify with equal windows and posts.
    pub tie_preference: Species,
}

impl Default for OwnershipRule {
    fn default() -> Self {
        Self { min_windows: 2, confidence_threshold: None, tie_preference: Species::Dog }
    }
}

/// Per-species evidence: windows and post count.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpeciesEvidence {
    pub windows: BTreeSet<WindowId>,
    pub posts: usize,
}

impl OwnershipRule {
    pub fn evidence(
        &self,
        timeline: &Timeline,
        predictions: &HashMap<String, PetPrediction>,
    ) -> Result<[SpeciesEvidence; 2], PetClassError> {
        let mut stamps = [Vec::new(), Vec::new()];
        for post in &timeline.posts {
            let pred = predictions
                .get(&post.post_id)
                .ok_or_else(|| PetClassError::MissingPrediction(post.post_id.clone()))?;
            match pred.label(self.confidence_threshold) {
                PetLabel::Dog => stamps[0].push(post.timestamp),
                PetLabel::Cat => stamps[1].push(post.timestamp),
                PetLabel::Other => {}
            }
        }
        Ok(stamps.map(|s| SpeciesEvidence { windows: week_windows(&s), posts: s.len() }))
    }

    pub fn identify(
        &self,
        timeline: &Timeline,
        predictions: &HashMap<String, PetPrediction>,
    ) -> Result<OwnershipLabel, PetClassError> {
        let [dog, cat] = self.evidence(timeline, predictions)?;
        let dog_ok = dog.windows.len() >= self.min_windows;
        let cat_ok = cat.windows.len() >= self.min_windows;
        Ok(match (dog_ok, cat_ok) {
            (false, false) => OwnershipLabel::None,
            (true, false) => OwnershipLabel::DogOwner,
            (false, true) => OwnershipLabel::CatOwner,
            (true, true) => {
                let key = |e: &SpeciesEvidence| (e.windows.len(), e.posts);
                match key(&dog).cmp(&key(&cat)) {
                    std::cmp::Ordering::Greater => OwnershipLabel::DogOwner,
                    std::cmp::Ordering::Less => OwnershipLabel::CatOwner,
                    std::cmp::Ordering::Equal => match self.tie_preference {
                        Species::Dog => OwnershipLabel::DogOwner,
                        Species::Cat => OwnershipLabel::CatOwner,
                    },
                }
            }
        })
    }
}

/// Pet-owner rule with default parameters.
pub fn identify_pet_owner(
    timeline: &Timeline,
    predictions: &HashMap<String, PetPrediction>,
) -> Result<OwnershipLabel, PetClassError> {
    OwnershipRule::default().identify(timeline, predictions)
}

/// 3x3 counts, rows = true label, columns = predicted label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: PetLabel, predicted: PetLabel) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn row_total(&self, truth: PetLabel) -> u64 {
        self.counts[truth.index()].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Diagonal over row sum; `None` for a class with no samples.
    pub fn class_accuracy(&self, label: PetLabel) -> Option<f64> {
        let n = self.row_total(label);
        (n > 0).then(|| self.counts[label.index()][label.index()] as f64 / n as f64)
    }

    pub fn overall_accuracy(&self) -> Option<f64> {
        let n = self.total();
        let diag: u64 = (0..3).map(|i| self.counts[i][i]).sum();
        (n > 0).then(|| diag as f64 / n as f64)
    }

    /// Tab-separated matrix with a header row and per-class accuracy column.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("true\\predicted\tdog\tcat\tother\taccuracy\n");
        for label in PetLabel::ALL {
            let row = self.counts[label.index()];
            let acc = self.class_accuracy(label).map_or("NA".to_string(), |a| format!("{a:.4}"));
            out.push_str(&format!("{label}\t{}\t{}\t{}\t{acc}\n", row[0], row[1], row[2]));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub matrix: ConfusionMatrix,
    pub accuracy: [Option<f64>; 3],
}

/// Scores `labeled_set` with `backend` and tabulates the confusion matrix.
pub fn validate_backend(
    labeled_set: &[(String, PetLabel)],
    backend: &dyn PetClassifier,
    max_in_flight: usize,
) -> Result<ValidationReport, PetClassError> {
    if labeled_set.is_empty() {
        return Err(PetClassError::EmptyLabeledSet);
    }
    let refs: Vec<&str> = labeled_set.iter().map(|(r, _)| r.as_str()).collect();
    let predictions = classify_images(&refs, backend, max_in_flight);
    let mut matrix = ConfusionMatrix::default();
    for ((_, truth), pred) in labeled_set.iter().zip(predictions) {
        matrix.record(*truth, pred?.argmax());
    }
    let accuracy = PetLabel::ALL.map(|l| matrix.class_accuracy(l));
    Ok(ValidationReport { matrix, accuracy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_timestamp, Post};

    fn post(id: &str, t: &str) -> Post {
        Post {
            post_id: id.into(),
            user_id: "u".into(),
            timestamp: parse_timestamp(t).unwrap(),
            image_ref: format!("img/{id}"),
            caption: String::new(),
            hashtags: Default::default(),
        }
    }

    fn setup(items: &[(&str, &str, PetLabel)]) -> (Timeline, HashMap<String, PetPrediction>) {
        let tl = Timeline::new("u", items.iter().map(|(id, t, _)| post(id, t)));
        let preds = items.iter().map(|(id, _, l)| (id.to_string(), PetPrediction::certain(*l))).collect();
        (tl, preds)
    }

    #[test]
    fn noiseless_mock_is_one_hot() {
        let mock = MockClassifier::from_records([LabelRecord { image_ref: "a".into(), label: PetLabel::Dog }]);
        let p = classify_image("a", &mock).unwrap();
        assert_eq!(p, PetPrediction { dog: 1.0, cat: 0.0, other: 0.0 });
    }

    #[test]
    fn unknown_image_is_other_and_counted() {
        let mock = MockClassifier::default();
        assert_eq!(mock.classify("nope").unwrap().argmax(), PetLabel::Other);
        assert_eq!(mock.unknown_count(), 1);
    }

    #[test]
    fn argmax_picks_other() {
        let p = PetPrediction::from_scores(0.2, 0.3, 0.5).unwrap();
        assert_eq!(p.argmax(), PetLabel::Other);
        assert!(PetPrediction::from_scores(-1.0, 1.0, 1.0).is_err());
        assert!(PetPrediction::from_scores(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn confidence_threshold_demotes_weak_pets() {
        let p = PetPrediction::from_scores(0.5, 0.3, 0.2).unwrap();
        assert_eq!(p.label(None), PetLabel::Dog);
        assert_eq!(p.label(Some(0.6)), PetLabel::Other);
    }

    #[test]
    fn dog_in_two_weeks_is_owner() {
        let (tl, preds) = setup(&[
            ("a", "2017-01-03T10:00:00Z", PetLabel::Dog),
            ("b", "2017-01-17T10:00:00Z", PetLabel::Dog),
            ("c", "2017-01-18T10:00:00Z", PetLabel::Other),
        ]);
        assert_eq!(identify_pet_owner(&tl, &preds).unwrap(), OwnershipLabel::DogOwner);
    }

    #[test]
    fn many_dogs_in_one_week_is_not_owner() {
        let items: Vec<(String, String)> =
            (0..9).map(|i| (format!("p{i}"), format!("2017-01-0{}T1{}:00:00Z", 2 + i % 5, i))).collect();
        let refs: Vec<(&str, &str, PetLabel)> =
            items.iter().map(|(a, b)| (a.as_str(), b.as_str(), PetLabel::Dog)).collect();
        let (tl, preds) = setup(&refs);
        assert_eq!(identify_pet_owner(&tl, &preds).unwrap(), OwnershipLabel::None);
    }

    #[test]
    fn no_pets_is_none() {
        let (tl, preds) = setup(&[("a", "2017-01-03T10:00:00Z", PetLabel::Other)]);
        assert_eq!(identify_pet_owner(&tl, &preds).unwrap(), OwnershipLabel::None);
    }

    #[test]
    fn both_species_conflict_resolution() {
        // cat has more windows
        let (tl, preds) = setup(&[
            ("d1", "2017-01-03T10:00:00Z", PetLabel::Dog),
            ("d2", "2017-01-10T10:00:00Z", PetLabel::Dog),
            ("c1", "2017-02-01T10:00:00Z", PetLabel::Cat),
            ("c2", "2017-02-08T10:00:00Z", PetLabel::Cat),
            ("c3", "2017-02-15T10:00:00Z", PetLabel::Cat),
        ]);
        assert_eq!(identify_pet_owner(&tl, &preds).unwrap(), OwnershipLabel::CatOwner);

        // equal windows, dog has more posts
        let (tl, preds) = setup(&[
            ("d1", "2017-01-03T10:00:00Z", PetLabel::Dog),
            ("d2", "2017-01-04T10:00:00Z", PetLabel::Dog),
            ("d3", "2017-01-10T10:00:00Z", PetLabel::Dog),
            ("c1", "2017-02-01T10:00:00Z", PetLabel::Cat),
            ("c2", "2017-02-08T10:00:00Z", PetLabel::Cat),
        ]);
        assert_eq!(identify_pet_owner(&tl, &preds).unwrap(), OwnershipLabel::DogOwner);

        // full tie falls back to the configured preference
        let (tl, preds) = setup(&[
            ("d1", "2017-01-03T10:00:00Z", PetLabel::Dog),
            ("d2", "2017-01-10T10:00:00Z", PetLabel::Dog),
            ("c1", "2017-02-01T10:00:00Z", PetLabel::Cat),
            ("c2", "2017-02-08T10:00:00Z", PetLabel::Cat),
        ]);
        assert_eq!(identify_pet_owner(&tl, &preds).unwrap(), OwnershipLabel::DogOwner);
        let cat_first = OwnershipRule { tie_preference: Species::Cat, ..Default::default() };
        assert_eq!(cat_first.identify(&tl, &preds).unwrap(), OwnershipLabel::CatOwner);
    }

    #[test]
    fn missing_prediction_is_an_error() {
        let (tl, mut preds) = setup(&[("a", "2017-01-03T10:00:00Z", PetLabel::Dog)]);
        preds.clear();
        assert!(matches!(identify_pet_owner(&tl, &preds), Err(PetClassError::MissingPrediction(id)) if id == "a"));
    }

    #[test]
    fn validation_of_noiseless_mock_is_perfect() {
        let set: Vec<(String, PetLabel)> =
            (0..30).map(|i| (format!("img{i}"), PetLabel::ALL[i % 3])).collect();
        let mock = MockClassifier::from_records(
            set.iter().map(|(r, l)| LabelRecord { image_ref: r.clone(), label: *l }),
        );
        let report = validate_backend(&set, &mock, 4).unwrap();
        assert_eq!(report.accuracy, [Some(1.0); 3]);
        assert_eq!(report.matrix.counts, [[10, 0, 0], [0, 10, 0], [0, 0, 10]]);
        assert_eq!(report.matrix.total(), set.len() as u64);
    }

    #[test]
    fn validation_single_sample() {
        let set = vec![("x".to_string(), PetLabel::Cat)];
        let mock = MockClassifier::from_records([LabelRecord { image_ref: "x".into(), label: PetLabel::Cat }]);
        let report = validate_backend(&set, &mock, 1).unwrap();
        assert_eq!(report.matrix.counts, [[0, 0, 0], [0, 1, 0], [0, 0, 0]]);
        assert_eq!(report.accuracy, [None, Some(1.0), None]);
    }

    #[test]
    fn validation_rejects_empty_set() {
        let mock = MockClassifier::default();
        assert!(matches!(validate_backend(&[], &mock, 1), Err(PetClassError::EmptyLabeledSet)));
    }

    #[test]
    fn noise_matrix_must_be_row_stochastic() {
        assert!(NoiseMatrix::reference_classifier().validate().is_ok());
        assert!(NoiseMatrix([[0.5, 0.5, 0.1], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).validate().is_err());
    }

    #[test]
    fn noisy_mock_is_deterministic_per_image() {
        let mock = MockClassifier::from_records((0..100).map(|i| LabelRecord {
            image_ref: format!("c{i}"),
            label: PetLabel::Cat,
        }))
        .with_noise(ClassifierNoise { matrix: NoiseMatrix::reference_classifier(), seed: 7 })
        .unwrap();
        for i in 0..100 {
            let r = format!("c{i}");
            assert_eq!(mock.classify(&r).unwrap(), mock.classify(&r).unwrap());
        }
    }
}
