//! End-to-end batch run: ingest, classify, detect, group, identify, infer,
//! score and compare, with a per-user checkpoint so interrupted runs resume.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::{bounded_map, BackendError};
use crate::corpus::{ingest_corpus, Corpus, CorpusError, DropReason, Eligibility, EligibilityRule, Timeline};
use crate::faceclient::{detect_faces, group_faces, FaceEngine, FaceError, GroupingConfig, MockFaceEngine};
use crate::happiness::{happiness_scores, HappinessError};
use crate::inference::{group_demographics, identify_user_index, InferenceError, RelationshipRule, UserProfile};
use crate::petclass::{ClassifierNoise, MockClassifier, NoiseMatrix, OwnershipRule, PetClassError, PetClassifier};
use crate::report::{build_reports, ReportError, ReportSet};
use crate::sentiment::Analyzer;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid run config: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Classifier(#[from] PetClassError),
    #[error(transparent)]
    Face(#[from] FaceError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("config file: {0}")]
    ConfigFile(#[from] toml::de::Error),
    #[error("cannot write config: {0}")]
    ConfigWrite(#[from] toml::ser::Error),
    #[error(
        "{failed} of {total} user(s) failed (first: {first_user}: {first_error}); \
         completed users are checkpointed in {checkpoint}, rerun to resume"
    )]
    Partial { failed: usize, total: usize, first_user: String, first_error: String, checkpoint: PathBuf },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

/// Per-user failure.
#[derive(Debug, thiserror::Error)]
pub enum UserError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Classifier(#[from] PetClassError),
    #[error(transparent)]
    Face(#[from] FaceError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Happiness(#[from] HappinessError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassifierBackend {
    /// Sidecar label file, optionally passed through a confusion matrix.
    Mock {
        labels: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise: Option<NoiseMatrix>,
    },
    Remote { url: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FaceBackend {
    /// Annotation file; `sigma` perturbs similarities.
    Mock {
        annotations: PathBuf,
        #[serde(default)]
        sigma: f64,
    },
    Remote { url: String },
}

fn default_alpha() -> f64 {
    0.05
}

fn default_concurrency() -> usize {
    8
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Vec<PathBuf>,
    pub classifier: ClassifierBackend,
    pub faces: FaceBackend,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    /// Users analyzed concurrently.
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    #[serde(default)]
    pub grouping: GroupingConfig,
    #[serde(default)]
    pub eligibility: EligibilityRule,
    #[serde(default)]
    pub ownership: OwnershipRule,
    #[serde(default)]
    pub relationships: RelationshipRule,
    #[cfg(feature = "remote")]
    #[serde(default)]
    pub http: crate::backend::http::HttpSettings,
}

impl RunConfig {
    /// Config using mock backends over the given files.
    pub fn with_mocks(corpus: PathBuf, labels: PathBuf, annotations: PathBuf, output_dir: PathBuf) -> Self {
        Self {
            corpus: vec![corpus],
            classifier: ClassifierBackend::Mock { labels, noise: None },
            faces: FaceBackend::Mock { annotations, sigma: 0.0 },
            output_dir,
            alpha: default_alpha(),
            seed: 0,
            concurrency: default_concurrency(),
            grouping: GroupingConfig::default(),
            eligibility: EligibilityRule::default(),
            ownership: OwnershipRule::default(),
            relationships: RelationshipRule::default(),
            #[cfg(feature = "remote")]
            http: Default::default(),
        }
    }

    /// Parses TOML; relative paths are taken relative to `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut c: Self = toml::from_str(text)?;
        c.resolve_paths(base);
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String, PipelineError> {
        Ok(toml::to_string(self)?)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.corpus.iter_mut().for_each(fix);
        fix(&mut self.output_dir);
        if let ClassifierBackend::Mock { labels, .. } = &mut self.classifier {
            fix(labels);
        }
        if let FaceBackend::Mock { annotations, .. } = &mut self.faces {
            fix(annotations);
        }
    }

    pub fn input_paths(&self) -> Vec<&Path> {
        let mut v: Vec<&Path> = self.corpus.iter().map(PathBuf::as_path).collect();
        if let ClassifierBackend::Mock { labels, .. } = &self.classifier {
            v.push(labels);
        }
        if let FaceBackend::Mock { annotations, .. } = &self.faces {
            v.push(annotations);
        }
        v
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::InvalidConfig(m));
        if self.corpus.is_empty() {
            return bad("at least one corpus path is required".into());
        }
        for p in self.input_paths() {
            if !p.is_file() {
                return bad(format!("{} does not exist", p.display()));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha = {} is not in (0, 1)", self.alpha));
        }
        if self.concurrency == 0 {
            return bad("concurrency must be at least 1".into());
        }
        if !(self.grouping.tau > 0.0 && self.grouping.tau < 1.0) {
            return bad(format!("grouping.tau = {} is not in (0, 1)", self.grouping.tau));
        }
        if let ClassifierBackend::Mock { noise: Some(m), .. } = &self.classifier {
            m.validate()?;
        }
        if let FaceBackend::Mock { sigma, .. } = &self.faces {
            if !(*sigma >= 0.0) {
                return bad(format!("faces.sigma = {sigma} must be non-negative"));
            }
        }
        Ok(())
    }

    /// Digest of everything that affects results: the config minus output
    /// location and concurrency, plus the contents of every input file.
    pub fn fingerprint(&self) -> Result<String, PipelineError> {
        let mut canonical = serde_json::to_value(self)?;
        if let Some(obj) = canonical.as_object_mut() {
            obj.remove("output_dir");
            obj.remove("concurrency");
            obj.remove("http");
        }
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&canonical)?);
        for p in self.input_paths() {
            h.update(file_digest(p)?.as_bytes());
        }
        Ok(hex(&h.finalize()))
    }

    pub fn build_classifier(&self) -> Result<Box<dyn PetClassifier>, PipelineError> {
        match &self.classifier {
            ClassifierBackend::Mock { labels, noise } => {
                let f = File::open(labels).map_err(io_err(labels))?;
                let mut mock = MockClassifier::from_reader(BufReader::new(f))?;
                if let Some(matrix) = noise {
                    mock = mock.with_noise(ClassifierNoise { matrix: *matrix, seed: self.seed })?;
                }
                Ok(Box::new(mock))
            }
            #[cfg(feature = "remote")]
            ClassifierBackend::Remote { url } => {
                Ok(Box::new(crate::backend::http::RemoteClassifier::new(url.clone(), self.http.clone())))
            }
            #[cfg(not(feature = "remote"))]
            ClassifierBackend::Remote { .. } => {
                Err(PipelineError::InvalidConfig("remote backends need the `remote` feature".into()))
            }
        }
    }

    pub fn build_face_engine(&self) -> Result<Box<dyn FaceEngine>, PipelineError> {
        match &self.faces {
            FaceBackend::Mock { annotations, sigma } => {
                let f = File::open(annotations).map_err(io_err(annotations))?;
                Ok(Box::new(MockFaceEngine::from_reader(BufReader::new(f))?.with_noise(*sigma, self.seed)))
            }
            #[cfg(feature = "remote")]
            FaceBackend::Remote { url } => {
                Ok(Box::new(crate::backend::http::RemoteFaceEngine::new(url.clone(), self.http.clone())))
            }
            #[cfg(not(feature = "remote"))]
            FaceBackend::Remote { .. } => {
                Err(PipelineError::InvalidConfig("remote backends need the `remote` feature".into()))
            }
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> Result<String, PipelineError> {
    let mut f = File::open(path).map_err(io_err(path))?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(io_err(path))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex(&h.finalize()))
}

/// Reads and merges corpus files in order.
pub fn load_corpus(paths: &[PathBuf]) -> Result<Corpus, PipelineError> {
    let mut reader: Box<dyn Read> = Box::new(std::io::empty());
    for p in paths {
        let f = File::open(p).map_err(io_err(p))?;
        reader = Box::new(reader.chain(f).chain(&b"\n"[..]));
    }
    Ok(ingest_corpus(BufReader::new(reader))?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum UserOutcome {
    Profile(UserProfile),
    Dropped { user_id: String, reason: DropReason },
}

impl UserOutcome {
    pub fn user_id(&self) -> &str {
        match self {
            UserOutcome::Profile(p) => &p.user_id,
            UserOutcome::Dropped { user_id, .. } => user_id,
        }
    }
}

/// Rules applied to each user.
#[derive(Debug, Clone, Copy, Default)]
pub struct AnalysisRules {
    pub grouping: GroupingConfig,
    pub eligibility: EligibilityRule,
    pub ownership: OwnershipRule,
    pub relationships: RelationshipRule,
}

impl From<&RunConfig> for AnalysisRules {
    fn from(c: &RunConfig) -> Self {
        Self { grouping: c.grouping, eligibility: c.eligibility, ownership: c.ownership, relationships: c.relationships }
    }
}

/// Full analysis of one timeline. Short timelines are dropped before any
/// backend call.
pub fn analyze_user(
    timeline: &Timeline,
    classifier: &dyn PetClassifier,
    faces: &dyn FaceEngine,
    analyzer: &Analyzer,
    rules: &AnalysisRules,
) -> Result<UserOutcome, UserError> {
    let dropped = |reason| UserOutcome::Dropped { user_id: timeline.user_id.clone(), reason };
    if let Eligibility::Drop(reason) = rules.eligibility.check(timeline.len(), usize::MAX) {
        return Ok(dropped(reason));
    }

    let mut predictions = HashMap::with_capacity(timeline.len());
    for post in &timeline.posts {
        predictions.insert(post.post_id.clone(), classifier.classify(&post.image_ref)?);
    }
    let ownership = rules.ownership.identify(timeline, &predictions)?;

    let mut observations = Vec::new();
    for post in &timeline.posts {
        observations.extend(
            detect_faces(post, faces)?.into_iter().filter(|f| f.bbox.area() >= rules.grouping.min_bbox_area),
        );
    }
    let groups = group_faces(&observations, rules.grouping.tau, faces)?;
    let user_index = match identify_user_index(&groups) {
        Ok(i) => i,
        Err(InferenceError::NoGroups) => return Ok(dropped(DropReason::TooFewFaces)),
        Err(e) => return Err(e.into()),
    };
    let user = &groups[user_index];
    if let Eligibility::Drop(reason) = rules.eligibility.check(timeline.len(), user.len()) {
        return Ok(dropped(reason));
    }

    let demographics = group_demographics(user)?;
    let others = rules.relationships.candidates(&groups, user_index);
    let has_partner = rules.relationships.has_partner(user, &others)?;
    let has_child = rules.relationships.has_child(user, &others)?;
    let captions: Vec<&str> = timeline.posts.iter().map(|p| p.caption.as_str()).collect();
    let scores = happiness_scores(&user.members, &captions, analyzer, timeline.period())?;

    Ok(UserOutcome::Profile(UserProfile {
        user_id: timeline.user_id.clone(),
        demographics,
        ownership,
        has_partner,
        has_child,
        visual_happiness: scores.visual,
        textual_happiness: scores.textual,
        face_count: user.len(),
        post_count: timeline.len(),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointMeta {
    fingerprint: String,
}

/// Append-only record of finished users, valid for one config fingerprint.
struct Checkpoint {
    path: PathBuf,
    writer: Mutex<BufWriter<File>>,
}

impl Checkpoint {
    /// Opens the checkpoint in `dir`, returning outcomes already recorded
    /// under the same fingerprint. A stale checkpoint is discarded.
    fn open(dir: &Path, fingerprint: &str) -> Result<(Self, Vec<UserOutcome>), PipelineError> {
        let path = dir.join("checkpoint.ndjson");
        let meta_path = dir.join("checkpoint.meta.json");
        let matches = std::fs::read_to_string(&meta_path)
            .ok()
            .and_then(|s| serde_json::from_str::<CheckpointMeta>(&s).ok())
            .is_some_and(|m| m.fingerprint == fingerprint);

        let mut done = Vec::new();
        if matches && path.exists() {
            let f = File::open(&path).map_err(io_err(&path))?;
            for line in BufReader::new(f).lines() {
                let line = line.map_err(io_err(&path))?;
                // a torn final line from an interrupted write is ignored
                if let Ok(o) = serde_json::from_str::<UserOutcome>(&line) {
                    done.push(o);
                }
            }
        } else {
            let meta = serde_json::to_string(&CheckpointMeta { fingerprint: fingerprint.to_string() })?;
            std::fs::write(&meta_path, meta + "\n").map_err(io_err(&meta_path))?;
            File::create(&path).map_err(io_err(&path))?;
        }
        let file = OpenOptions::new().append(true).open(&path).map_err(io_err(&path))?;
        Ok((Self { path, writer: Mutex::new(BufWriter::new(file)) }, done))
    }

    fn record(&self, outcome: &UserOutcome) -> std::io::Result<()> {
        let mut line = serde_json::to_vec(outcome).map_err(std::io::Error::other)?;
        line.push(b'\n');
        let mut w = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        w.write_all(&line)?;
        w.flush()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub users_total: usize,
    pub profiles: usize,
    pub dropped_too_few_posts: usize,
    pub dropped_too_few_faces: usize,
    pub dog_owners: usize,
    pub cat_owners: usize,
    pub non_owners: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub fingerprint: String,
    pub crate_name: String,
    pub version: String,
    pub modules: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, String>,
    /// Output file name to SHA-256.
    pub outputs: BTreeMap<String, String>,
    pub resumed_users: usize,
    pub created_at: String,
}

pub const MODULES: [&str; 9] =
    ["corpus", "petclass", "faceclient", "inference", "sentiment", "happiness", "stats", "synth", "report"];

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub profiles: Vec<UserProfile>,
    pub outcomes: Vec<UserOutcome>,
    pub summary: RunSummary,
    pub reports: ReportSet,
    pub files: Vec<PathBuf>,
    pub resumed_users: usize,
}

/// Runs the pipeline with backends built from `config`.
pub fn run_pipeline(config: &RunConfig) -> Result<RunArtifacts, PipelineError> {
    config.validate()?;
    let classifier = config.build_classifier()?;
    let faces = config.build_face_engine()?;
    run_pipeline_with(config, classifier.as_ref(), faces.as_ref())
}

/// Runs the pipeline with caller-supplied backends.
pub fn run_pipeline_with(
    config: &RunConfig,
    classifier: &dyn PetClassifier,
    faces: &dyn FaceEngine,
) -> Result<RunArtifacts, PipelineError> {
    config.validate()?;
    let out = &config.output_dir;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let fingerprint = config.fingerprint()?;

    let corpus = load_corpus(&config.corpus)?;
    let ingest_path = out.join("ingest_report.txt");
    std::fs::write(&ingest_path, corpus.report.to_kv()).map_err(io_err(&ingest_path))?;

    let (checkpoint, previous) = Checkpoint::open(out, &fingerprint)?;
    let mut outcomes: BTreeMap<String, UserOutcome> = previous
        .into_iter()
        .filter(|o| corpus.timelines.contains_key(o.user_id()))
        .map(|o| (o.user_id().to_string(), o))
        .collect();
    let resumed_users = outcomes.len();
    let pending: Vec<&Timeline> = corpus.timelines.values().filter(|t| !outcomes.contains_key(&t.user_id)).collect();
    log::info!("{} user(s) total, {} resumed from checkpoint, {} to analyze", corpus.timelines.len(), resumed_users, pending.len());

    let analyzer = Analyzer::default();
    let rules = AnalysisRules::from(config);
    let results = bounded_map(&pending, config.concurrency, |t| {
        let r = analyze_user(t, classifier, faces, &analyzer, &rules);
        match &r {
            Ok(o) => {
                if let Err(e) = checkpoint.record(o) {
                    log::error!("cannot append to {}: {e}", checkpoint.path.display());
                }
            }
            Err(e) => log::warn!("user {} failed: {e}", t.user_id),
        }
        r
    });

    let mut failures = Vec::new();
    for (t, r) in pending.iter().zip(results) {
        match r {
            Ok(o) => {
                outcomes.insert(t.user_id.clone(), o);
            }
            Err(e) => failures.push((t.user_id.clone(), e.to_string())),
        }
    }
    if let Some((first_user, first_error)) = failures.first().cloned() {
        return Err(PipelineError::Partial {
            failed: failures.len(),
            total: corpus.timelines.len(),
            first_user,
            first_error,
            checkpoint: checkpoint.path.clone(),
        });
    }

    let outcomes: Vec<UserOutcome> = outcomes.into_values().collect();
    let profiles: Vec<UserProfile> = outcomes
        .iter()
        .filter_map(|o| match o {
            UserOutcome::Profile(p) => Some(p.clone()),
            UserOutcome::Dropped { .. } => None,
        })
        .collect();
    let summary = summarize(&outcomes);
    let reports = build_reports(&profiles, config.alpha)?;
    let mut files = vec![ingest_path];
    files.extend(write_run_outputs(out, &profiles, &outcomes, &summary)?);
    files.extend(reports.write_to_dir(out)?);
    files.push(write_manifest(config, &fingerprint, &files, resumed_users)?);

    Ok(RunArtifacts { profiles, outcomes, summary, reports, files, resumed_users })
}

fn summarize(outcomes: &[UserOutcome]) -> RunSummary {
    use crate::petclass::OwnershipLabel as O;
    let mut s = RunSummary { users_total: outcomes.len(), ..Default::default() };
    for o in outcomes {
        match o {
            UserOutcome::Profile(p) => {
                s.profiles += 1;
                match p.ownership {
                    O::DogOwner => s.dog_owners += 1,
                    O::CatOwner => s.cat_owners += 1,
                    O::None => s.non_owners += 1,
                }
            }
            UserOutcome::Dropped { reason: DropReason::TooFewPosts, .. } => s.dropped_too_few_posts += 1,
            UserOutcome::Dropped { reason: DropReason::TooFewFaces, .. } => s.dropped_too_few_faces += 1,
        }
    }
    s
}

pub fn write_profiles<W: Write>(profiles: &[UserProfile], mut out: W) -> std::io::Result<()> {
    for p in profiles {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Reads newline-delimited profiles, sorted by user id.
pub fn read_profiles(path: &Path) -> Result<Vec<UserProfile>, PipelineError> {
    let f = File::open(path).map_err(io_err(path))?;
    let mut v = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(io_err(path))?;
        if !line.trim().is_empty() {
            v.push(serde_json::from_str::<UserProfile>(&line)?);
        }
    }
    v.sort_by(|a: &UserProfile, b| a.user_id.cmp(&b.user_id));
    Ok(v)
}

fn write_run_outputs(
    dir: &Path,
    profiles: &[UserProfile],
    outcomes: &[UserOutcome],
    summary: &RunSummary,
) -> Result<Vec<PathBuf>, PipelineError> {
    let profiles_path = dir.join("profiles.ndjson");
    let f = File::create(&profiles_path).map_err(io_err(&profiles_path))?;
    write_profiles(profiles, BufWriter::new(f)).map_err(io_err(&profiles_path))?;

    let dropped_path = dir.join("dropped.tsv");
    let mut dropped = String::from("user_id\treason\n");
    for o in outcomes {
        if let UserOutcome::Dropped { user_id, reason } = o {
            dropped.push_str(&format!("{user_id}\t{reason}\n"));
        }
    }
    std::fs::write(&dropped_path, dropped).map_err(io_err(&dropped_path))?;

    let summary_path = dir.join("run_summary.json");
    std::fs::write(&summary_path, serde_json::to_string_pretty(summary)? + "\n").map_err(io_err(&summary_path))?;
    Ok(vec![profiles_path, dropped_path, summary_path])
}

fn write_manifest(
    config: &RunConfig,
    fingerprint: &str,
    files: &[PathBuf],
    resumed_users: usize,
) -> Result<PathBuf, PipelineError> {
    let version = env!("CARGO_PKG_VERSION").to_string();
    let mut outputs = BTreeMap::new();
    for f in files {
        let name = f.strip_prefix(&config.output_dir).unwrap_or(f).display().to_string();
        outputs.insert(name, file_digest(f)?);
    }
    let mut inputs = BTreeMap::new();
    for p in config.input_paths() {
        inputs.insert(p.display().to_string(), file_digest(p)?);
    }
    let manifest = Manifest {
        fingerprint: fingerprint.to_string(),
        crate_name: env!("CARGO_PKG_NAME").to_string(),
        version: version.clone(),
        modules: MODULES.iter().map(|m| (m.to_string(), version.clone())).collect(),
        inputs,
        outputs,
        resumed_users,
        created_at: chrono::DateTime::<chrono::Utc>::from(std::time::SystemTime::now()).to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    };
    let path = config.output_dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(io_err(&path))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_config_resolves_relative_paths() {
        let text = r#"
            corpus = ["data/corpus.ndjson"]
            alpha = 0.01
            [classifier]
            kind = "mock"
            labels = "data/labels.ndjson"
            [faces]
            kind = "mock"
            annotations = "/abs/annotations.ndjson"
            sigma = 0.1
            [grouping]
            tau = 0.8
        "#;
        let c = RunConfig::from_toml(text, Path::new("/base")).unwrap();
        assert_eq!(c.corpus, vec![PathBuf::from("/base/data/corpus.ndjson")]);
        assert_eq!(c.output_dir, PathBuf::from("/base/out"));
        assert_eq!(c.alpha, 0.01);
        assert_eq!(c.grouping.tau, 0.8);
        assert_eq!(c.eligibility, EligibilityRule::default());
        assert!(matches!(&c.faces, FaceBackend::Mock { annotations, sigma } if annotations == Path::new("/abs/annotations.ndjson") && *sigma == 0.1));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "corpus = []\nalhpa = 0.1\n[classifier]\nkind = \"remote\"\nurl = \"x\"\n[faces]\nkind = \"remote\"\nurl = \"y\"\n";
        assert!(RunConfig::from_toml(text, Path::new(".")).is_err());
    }

    #[test]
    fn validation_checks_paths_and_alpha() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("x.ndjson");
        std::fs::write(&f, "").unwrap();
        let ok = RunConfig::with_mocks(f.clone(), f.clone(), f.clone(), dir.path().join("out"));
        ok.validate().unwrap();
        assert!(RunConfig { alpha: 1.0, ..ok.clone() }.validate().is_err());
        assert!(RunConfig { corpus: vec![dir.path().join("missing")], ..ok.clone() }.validate().is_err());
        assert_ne!(ok.fingerprint().unwrap(), RunConfig { alpha: 0.01, ..ok.clone() }.fingerprint().unwrap());
        assert_eq!(
            ok.fingerprint().unwrap(),
            RunConfig { concurrency: 1, output_dir: dir.path().join("elsewhere"), ..ok.clone() }.fingerprint().unwrap()
        );
    }
}
