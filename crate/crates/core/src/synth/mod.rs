//! Deterministic synthetic corpora with planted ground truth.
//!
//! A generated corpus consists of post records, a sidecar image-label file
//! for the mock classifier, a face-annotation file for the mock face engine
//! and one ground-truth record per user.

mod evaluate;
mod templates;

pub use evaluate::{evaluate_pipeline, BinaryMetrics, EvalReport, OwnershipMetrics};
pub use templates::{CaptionBank, Tone, HASHTAGS, NEGATIVE, NEUTRAL, POSITIVE};

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusError, DropReason, EligibilityRule, Eligibility, Post};
use crate::faceclient::{AnnotatedFace, AnnotationRecord, BBox, Gender, MockFaceEngine, Race};
use crate::inference::Demographics;
use crate::petclass::{ClassifierNoise, LabelRecord, MockClassifier, NoiseMatrix, OwnershipLabel, PetClassError, PetLabel};
use crate::rng::{keyed_rng, truncated_normal, truncated_normal_location};

/// Reachable range for a user's expected smiling mean.
const VISUAL_TARGET_RANGE: (f64, f64) = (2.5, 97.5);
use crate::sentiment::Analyzer;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic corpus config: {0}")]
    InvalidConfig(String),
    #[error("profile for user {0:?} has no matching ground-truth record")]
    IdMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Classifier(#[from] PetClassError),
    #[error("config file: {0}")]
    ConfigFile(#[from] toml::de::Error),
    #[error("config serialization: {0}")]
    ConfigWrite(#[from] toml::ser::Error),
}

/// Per-user mean smiling: `base + sum of effects + N(0, user_sd)`; each face
/// then draws from a normal around that mean truncated to `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmilingModel {
    pub base: f64,
    /// Pet owners over non-owners.
    pub owner_gap: f64,
    /// Dog owners over cat owners, split symmetrically around the owner mean.
    pub dog_cat_gap: f64,
    pub female: f64,
    pub partner: f64,
    pub child: f64,
    pub asian: f64,
    pub user_sd: f64,
    pub face_sd: f64,
    /// Smiling of everyone other than the account holder.
    pub others_mean: f64,
    pub others_sd: f64,
}

impl Default for SmilingModel {
    fn default() -> Self {
        Self {
            base: 49.0,
            owner_gap: 10.92,
            dog_cat_gap: 3.31,
            female: 11.5,
            partner: 3.5,
            child: 4.7,
            asian: -3.2,
            user_sd: 18.0,
            face_sd: 15.0,
            others_mean: 50.0,
            others_sd: 20.0,
        }
    }
}

/// Caption tone mixture. Effects move probability mass from the negative
/// pool to the positive one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaptionModel {
    pub positive_base: f64,
    pub negative_base: f64,
    pub owner_shift: f64,
    pub dog_cat_shift: f64,
    pub partner_shift: f64,
    pub child_shift: f64,
}

impl Default for CaptionModel {
    fn default() -> Self {
        Self {
            positive_base: 0.35,
            negative_base: 0.2,
            owner_shift: 0.08,
            dog_cat_shift: 0.04,
            partner_shift: 0.03,
            child_shift: 0.03,
        }
    }
}

/// Backend noise used by [`SynthOutput::mock_classifier`] and
/// [`SynthOutput::mock_face_engine`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSettings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classifier: Option<NoiseMatrix>,
    pub face_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    /// Eligible users; decoys come on top.
    pub n_users: usize,
    pub owner_fraction: f64,
    /// Share of owners that own dogs.
    pub dog_share: f64,
    pub partner_fraction: f64,
    pub child_fraction: f64,
    pub female_fraction: f64,
    /// Asian, African American, Caucasian weights.
    pub race_mix: [f64; 3],
    pub age_range: (u32, u32),
    /// Age range of users planted with a child.
    pub parent_age_range: (u32, u32),
    pub posts_per_user: (usize, usize),
    pub weeks_span: u32,
    pub pet_posts: (usize, usize),
    /// Share of posts showing the account holder.
    pub user_face_rate: f64,
    /// Ineligible decoy users, as a fraction of `n_users`.
    pub decoy_fraction: f64,
    /// Probability of each optional trap case per user.
    pub trap_rate: f64,
    /// Share of non-owners whose pet photos all fall in one week.
    pub pet_poster_rate: f64,
    pub smiling: SmilingModel,
    pub captions: CaptionModel,
    pub noise: NoiseSettings,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 2017,
            n_users: 1000,
            owner_fraction: 0.5,
            dog_share: 0.5,
            partner_fraction: 0.45,
            child_fraction: 0.25,
            female_fraction: 0.69,
            race_mix: [0.21, 0.065, 0.725],
            age_range: (19, 60),
            parent_age_range: (38, 60),
            posts_per_user: (25, 45),
            weeks_span: 26,
            pet_posts: (3, 8),
            user_face_rate: 0.5,
            decoy_fraction: 0.05,
            trap_rate: 0.3,
            pet_poster_rate: 0.1,
            smiling: SmilingModel::default(),
            captions: CaptionModel::default(),
            noise: NoiseSettings::default(),
        }
    }
}

fn fraction(name: &str, v: f64) -> Result<(), SynthError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(SynthError::InvalidConfig(format!("{name} = {v} is not in [0, 1]")))
    }
}

impl SynthConfig {
    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String, SynthError> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        for (name, v) in [
            ("owner_fraction", self.owner_fraction),
            ("dog_share", self.dog_share),
            ("partner_fraction", self.partner_fraction),
            ("child_fraction", self.child_fraction),
            ("female_fraction", self.female_fraction),
            ("user_face_rate", self.user_face_rate),
            ("decoy_fraction", self.decoy_fraction),
            ("trap_rate", self.trap_rate),
            ("pet_poster_rate", self.pet_poster_rate),
            ("captions.positive_base", self.captions.positive_base),
            ("captions.negative_base", self.captions.negative_base),
        ] {
            fraction(name, v)?;
        }
        if self.captions.positive_base + self.captions.negative_base > 1.0 {
            return bad("caption tone probabilities exceed 1".into());
        }
        if self.n_users == 0 {
            return bad("n_users must be positive".into());
        }
        if self.race_mix.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || self.race_mix.iter().sum::<f64>() <= 0.0 {
            return bad(format!("race_mix {:?} must be non-negative with a positive sum", self.race_mix));
        }
        let min_posts = EligibilityRule::default().min_posts;
        let (lo, hi) = self.posts_per_user;
        if lo < min_posts || lo > hi {
            return bad(format!("posts_per_user ({lo}, {hi}) must satisfy {min_posts} <= lo <= hi"));
        }
        let (alo, ahi) = self.age_range;
        if alo <= 18 || alo > ahi {
            return bad(format!("age_range ({alo}, {ahi}) must be adult and ordered"));
        }
        let (plo, phi) = self.parent_age_range;
        if plo < 19 + 18 || plo > phi {
            return bad(format!("parent_age_range ({plo}, {phi}) must start at 37 or later and be ordered"));
        }
        if self.weeks_span < 2 {
            return bad("weeks_span must be at least 2".into());
        }
        let (pp_lo, pp_hi) = self.pet_posts;
        if pp_lo < 2 || pp_lo > pp_hi || pp_hi > lo {
            return bad(format!("pet_posts ({pp_lo}, {pp_hi}) must satisfy 2 <= lo <= hi <= posts_per_user.0"));
        }
        let s = &self.smiling;
        if !(s.user_sd >= 0.0 && s.face_sd >= 0.0 && s.others_sd >= 0.0) {
            return bad("smiling standard deviations must be non-negative".into());
        }
        if let Some(m) = &self.noise.classifier {
            m.validate()?;
        }
        if !(self.noise.face_sigma >= 0.0) {
            return bad("noise.face_sigma must be non-negative".into());
        }
        Ok(())
    }

    /// First instant of the generated timelines (a Monday, ISO week 1 of
    /// 2017).
    pub fn start(&self) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2017, 1, 2, 0, 0, 0).single().expect("valid start date")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trap {
    /// Non-owner whose pet photos all fall in one week.
    SingleWeekPetPoster,
    /// Owner with a few photos of the other species inside one week.
    CrossSpeciesSingleWeek,
    /// Recurring companion exactly 5 years apart.
    PartnerGapFive,
    /// Recurring companion exactly 18 years younger.
    ChildGapEighteen,
    /// Recurring companion 25 years older.
    OlderParent,
    /// Near-age companion seen only within one week.
    SingleWeekFriend,
    /// Two recurring companions with the same face count.
    TiedCompanions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub user_id: String,
    pub eligible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop_reason: Option<DropReason>,
    pub ownership: OwnershipLabel,
    pub has_partner: bool,
    pub has_child: bool,
    pub demographics: Demographics,
    /// Per-user smiling mean from the additive effects, before clamping.
    pub planted_visual: f64,
    /// Mean of the per-face smiling distribution actually sampled.
    pub expected_visual: f64,
    /// Mean of the smiling values actually written; `None` without faces.
    pub realized_visual: Option<f64>,
    pub expected_textual: f64,
    pub realized_textual: f64,
    pub post_count: usize,
    pub user_faces: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traps: Vec<Trap>,
}

/// Averages over eligible users of one ownership stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumTruth {
    pub label: String,
    pub users: usize,
    pub planted_visual: f64,
    pub expected_visual: f64,
    pub expected_textual: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Sorted by `user_id`.
    pub records: Vec<TruthRecord>,
    pub strata: Vec<StratumTruth>,
}

impl GroundTruth {
    pub fn get(&self, user_id: &str) -> Option<&TruthRecord> {
        self.records
            .binary_search_by(|r| r.user_id.as_str().cmp(user_id))
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn eligible(&self) -> impl Iterator<Item = &TruthRecord> {
        self.records.iter().filter(|r| r.eligible)
    }

    pub fn write_ndjson<W: Write>(&self, mut out: W) -> Result<(), SynthError> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads records written by [`GroundTruth::write_ndjson`]; strata are
    /// recomputed.
    pub fn read_ndjson<R: BufRead>(reader: R) -> Result<Self, SynthError> {
        let mut records = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if !line.trim().is_empty() {
                records.push(serde_json::from_str::<TruthRecord>(&line)?);
            }
        }
        records.sort_by(|a, b| a.user_id.cmp(&b.user_id));
        let strata = strata(&records);
        Ok(Self { records, strata })
    }
}

fn strata(records: &[TruthRecord]) -> Vec<StratumTruth> {
    let groups: [(&str, fn(OwnershipLabel) -> bool); 4] = [
        ("dog", |o| o == OwnershipLabel::DogOwner),
        ("cat", |o| o == OwnershipLabel::CatOwner),
        ("pet", |o| o.is_owner()),
        ("none", |o| o == OwnershipLabel::None),
    ];
    groups
        .iter()
        .map(|(label, admit)| {
            let rs: Vec<&TruthRecord> = records.iter().filter(|r| r.eligible && admit(r.ownership)).collect();
            let n = rs.len().max(1) as f64;
            StratumTruth {
                label: label.to_string(),
                users: rs.len(),
                planted_visual: rs.iter().map(|r| r.planted_visual).sum::<f64>() / n,
                expected_visual: rs.iter().map(|r| r.expected_visual).sum::<f64>() / n,
                expected_textual: rs.iter().map(|r| r.expected_textual).sum::<f64>() / n,
            }
        })
        .collect()
}

/// Paths written by [`SynthOutput::write_to_dir`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthFiles {
    pub corpus: PathBuf,
    pub labels: PathBuf,
    pub annotations: PathBuf,
    pub truth: PathBuf,
    pub summary: PathBuf,
    pub config: PathBuf,
}

impl SynthFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            corpus: dir.join("corpus.ndjson"),
            labels: dir.join("labels.ndjson"),
            annotations: dir.join("annotations.ndjson"),
            truth: dir.join("truth.ndjson"),
            summary: dir.join("truth_summary.json"),
            config: dir.join("synth.toml"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub config: SynthConfig,
    /// Grouped by user, each user's posts in timestamp order.
    pub posts: Vec<Post>,
    pub labels: Vec<LabelRecord>,
    pub annotations: Vec<AnnotationRecord>,
    pub truth: GroundTruth,
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<(), SynthError> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

impl SynthOutput {
    pub fn mock_classifier(&self) -> Result<MockClassifier, SynthError> {
        let mock = MockClassifier::from_records(self.labels.iter().cloned());
        Ok(match self.config.noise.classifier {
            Some(matrix) => mock.with_noise(ClassifierNoise { matrix, seed: self.config.seed })?,
            None => mock,
        })
    }

    pub fn mock_face_engine(&self) -> MockFaceEngine {
        MockFaceEngine::new(self.annotations.iter().cloned()).with_noise(self.config.noise.face_sigma, self.config.seed)
    }

    /// Writes all artifacts into `dir`, creating it if needed.
    pub fn write_to_dir(&self, dir: &Path) -> Result<SynthFiles, SynthError> {
        std::fs::create_dir_all(dir)?;
        let files = SynthFiles::in_dir(dir);
        write_lines(&files.corpus, &self.posts)?;
        write_lines(&files.labels, &self.labels)?;
        write_lines(&files.annotations, &self.annotations)?;
        let mut w = BufWriter::new(File::create(&files.truth)?);
        self.truth.write_ndjson(&mut w)?;
        w.flush()?;
        std::fs::write(&files.summary, serde_json::to_string_pretty(&self.truth.strata)? + "\n")?;
        std::fs::write(&files.config, self.config.to_toml()?)?;
        Ok(files)
    }
}

pub fn read_truth(path: &Path) -> Result<GroundTruth, SynthError> {
    GroundTruth::read_ndjson(BufReader::new(File::open(path)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Eligible,
    FewPosts,
    FewFaces,
}

#[derive(Debug, Clone)]
struct UserPlan {
    user_id: String,
    kind: Kind,
    ownership: OwnershipLabel,
    partner: bool,
    child: bool,
    gender: Gender,
    race: Race,
}

/// Largest-remainder split of `n` items by `weights`.
fn apportion(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let raw: Vec<f64> = weights.iter().map(|w| n as f64 * w / total).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

fn exact_count(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction).round() as usize).min(n)
}

/// Marks exactly `count` of `members` (chosen by shuffle) as true.
fn exact_flags(rng: &mut ChaCha8Rng, members: &[usize], count: usize, flags: &mut [bool]) {
    let mut m = members.to_vec();
    m.shuffle(rng);
    for &i in m.iter().take(count) {
        flags[i] = true;
    }
}

fn plan_users(config: &SynthConfig) -> Vec<UserPlan> {
    let n = config.n_users;
    let mut rng = keyed_rng(config.seed, &[b"plan"]);

    let n_owner = exact_count(n, config.owner_fraction);
    let n_dog = exact_count(n_owner, config.dog_share);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut ownership = vec![OwnershipLabel::None; n];
    for (pos, &i) in order.iter().enumerate() {
        if pos < n_dog {
            ownership[i] = OwnershipLabel::DogOwner;
        } else if pos < n_owner {
            ownership[i] = OwnershipLabel::CatOwner;
        }
    }

    let mut female = vec![false; n];
    let mut partner = vec![false; n];
    let mut child = vec![false; n];
    let mut race = vec![Race::Caucasian; n];
    // exact composition inside every ownership class keeps the planted
    // class contrasts free of demographic imbalance
    for class in [OwnershipLabel::DogOwner, OwnershipLabel::CatOwner, OwnershipLabel::None] {
        let members: Vec<usize> = (0..n).filter(|&i| ownership[i] == class).collect();
        let m = members.len();
        exact_flags(&mut rng, &members, exact_count(m, config.female_fraction), &mut female);
        exact_flags(&mut rng, &members, exact_count(m, config.partner_fraction), &mut partner);
        exact_flags(&mut rng, &members, exact_count(m, config.child_fraction), &mut child);
        let counts = apportion(m, &config.race_mix);
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        let mut it = shuffled.into_iter();
        for (r, count) in Race::ALL.into_iter().zip(counts) {
            for i in it.by_ref().take(count) {
                race[i] = r;
            }
        }
    }

    let mut plans: Vec<UserPlan> = (0..n)
        .map(|i| UserPlan {
            user_id: format!("u{i:05}"),
            kind: Kind::Eligible,
            ownership: ownership[i],
            partner: partner[i],
            child: child[i],
            gender: if female[i] { Gender::Female } else { Gender::Male },
            race: race[i],
        })
        .collect();

    let n_decoys = exact_count(n, config.decoy_fraction);
    for j in 0..n_decoys {
        let owner = rng.gen_bool(config.owner_fraction);
        plans.push(UserPlan {
            user_id: format!("x{j:05}"),
            kind: if j % 2 == 0 { Kind::FewPosts } else { Kind::FewFaces },
            ownership: match (owner, rng.gen_bool(config.dog_share)) {
                (false, _) => OwnershipLabel::None,
                (true, true) => OwnershipLabel::DogOwner,
                (true, false) => OwnershipLabel::CatOwner,
            },
            partner: false,
            child: false,
            gender: if rng.gen_bool(config.female_fraction) { Gender::Female } else { Gender::Male },
            race: Race::ALL[rng.gen_range(0..3)],
        });
    }
    plans
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Spread {
    /// At least two distinct weeks.
    Recurring,
    /// All faces inside one week.
    SingleWeek,
    Anywhere,
}

#[derive(Debug, Clone)]
struct Person {
    id: String,
    age: u32,
    gender: Gender,
    race: Race,
    faces: usize,
    spread: Spread,
}

/// `count` distinct posts from `candidates`, spanning at least two weeks
/// when the candidates allow it.
fn pick_spanning(rng: &mut ChaCha8Rng, candidates: &[usize], count: usize, week: &[u32]) -> Vec<usize> {
    let mut pool = candidates.to_vec();
    pool.shuffle(rng);
    let count = count.min(pool.len());
    let mut chosen: Vec<usize> = pool[..count].to_vec();
    if count >= 2 && chosen.iter().all(|&p| week[p] == week[chosen[0]]) {
        if let Some(&other) = pool[count..].iter().find(|&&p| week[p] != week[chosen[0]]) {
            chosen[count - 1] = other;
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Posts of the week holding the most posts (earliest such week on ties).
fn busiest_week(week: &[u32]) -> Vec<usize> {
    let mut best: Vec<usize> = Vec::new();
    let mut start = 0;
    while start < week.len() {
        let end = start + week[start..].iter().take_while(|&&w| w == week[start]).count();
        if end - start > best.len() {
            best = (start..end).collect();
        }
        start = end;
    }
    best
}

struct UserData {
    posts: Vec<Post>,
    labels: Vec<LabelRecord>,
    annotations: Vec<AnnotationRecord>,
    truth: TruthRecord,
}

fn species_label(o: OwnershipLabel) -> Option<PetLabel> {
    match o {
        OwnershipLabel::DogOwner => Some(PetLabel::Dog),
        OwnershipLabel::CatOwner => Some(PetLabel::Cat),
        OwnershipLabel::None => None,
    }
}

fn other_gender(g: Gender) -> Gender {
    match g {
        Gender::Male => Gender::Female,
        Gender::Female => Gender::Male,
    }
}

fn generate_user(config: &SynthConfig, bank: &CaptionBank, plan: &UserPlan) -> UserData {
    let mut rng = keyed_rng(config.seed, &[b"user", plan.user_id.as_bytes()]);
    let uid = &plan.user_id;
    let rule = EligibilityRule::default();
    let mut traps = BTreeSet::new();

    let age = if plan.child {
        rng.gen_range(config.parent_age_range.0..=config.parent_age_range.1)
    } else {
        rng.gen_range(config.age_range.0..=config.age_range.1)
    };

    // timeline skeleton
    let n_posts = match plan.kind {
        Kind::FewPosts => rng.gen_range(10..rule.min_posts),
        _ => rng.gen_range(config.posts_per_user.0..=config.posts_per_user.1),
    };
    let span = config.weeks_span;
    let mut offsets: Vec<i64> =
        (0..n_posts).map(|_| rng.gen_range(0..span) as i64 * 604_800 + rng.gen_range(0..604_800)).collect();
    offsets.sort_unstable();
    if offsets.first().map(|f| f / 604_800) == offsets.last().map(|l| l / 604_800) {
        let last = offsets.len() - 1;
        offsets[last] = ((offsets[last] / 604_800 + 1) % span as i64) * 604_800;
        offsets.sort_unstable();
    }
    let week: Vec<u32> = offsets.iter().map(|o| (o / 604_800) as u32).collect();
    let all: Vec<usize> = (0..n_posts).collect();

    // pet images
    let mut labels = vec![PetLabel::Other; n_posts];
    if let Some(species) = species_label(plan.ownership) {
        let n_pet = rng.gen_range(config.pet_posts.0..=config.pet_posts.1);
        for p in pick_spanning(&mut rng, &all, n_pet, &week) {
            labels[p] = species;
        }
        if rng.gen_bool(config.trap_rate / 2.0) {
            let other = if species == PetLabel::Dog { PetLabel::Cat } else { PetLabel::Dog };
            let free: Vec<usize> = all.iter().copied().filter(|&p| labels[p] == PetLabel::Other).collect();
            if let Some(&anchor) = free.choose(&mut rng) {
                let same: Vec<usize> = free.iter().copied().filter(|&p| week[p] == week[anchor]).collect();
                for &p in same.iter().take(rng.gen_range(1..=2)) {
                    labels[p] = other;
                }
                traps.insert(Trap::CrossSpeciesSingleWeek);
            }
        }
    } else if rng.gen_bool(config.pet_poster_rate) {
        let species = if rng.gen_bool(0.5) { PetLabel::Dog } else { PetLabel::Cat };
        let busiest = busiest_week(&week);
        let k = rng.gen_range(2..=4).min(busiest.len());
        for &p in busiest.iter().take(k) {
            labels[p] = species;
        }
        traps.insert(Trap::SingleWeekPetPoster);
    }

    // people
    let mut companions: Vec<Person> = Vec::new();
    let companion = |tag: &str, age: u32, gender: Gender, race: Race| Person {
        id: format!("{uid}/{tag}"),
        age,
        gender,
        race,
        faces: 0,
        spread: Spread::Recurring,
    };
    let near_race = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.8) { plan.race } else { Race::ALL[rng.gen_range(0..3)] };
    let random_gender = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { Gender::Male } else { Gender::Female };
    if plan.kind != Kind::FewFaces {
        if plan.partner {
            let gap = rng.gen_range(0..=4u32);
            let a = if rng.gen_bool(0.5) || age < gap + 19 { age + gap } else { age - gap };
            let r = near_race(&mut rng);
            companions.push(companion("partner", a, other_gender(plan.gender), r));
        }
        if plan.child {
            let gap = rng.gen_range(19..=age.min(35));
            let (g, r) = (random_gender(&mut rng), near_race(&mut rng));
            companions.push(companion("child", age - gap, g, r));
        }
        let mut options = vec![Trap::OlderParent];
        if !plan.partner {
            options.push(Trap::PartnerGapFive);
        }
        if !plan.child {
            options.push(Trap::ChildGapEighteen);
        }
        while companions.len() < 2 && !options.is_empty() && rng.gen_bool(config.trap_rate) {
            let t = options.remove(rng.gen_range(0..options.len()));
            let (g, r) = (random_gender(&mut rng), near_race(&mut rng));
            let person = match t {
                Trap::OlderParent => companion("parent", age + 25, g, r),
                Trap::PartnerGapFive => companion("gap5", if age >= 24 && rng.gen_bool(0.5) { age - 5 } else { age + 5 }, g, r),
                _ => companion("gap18", age - 18, g, r),
            };
            companions.push(person);
            traps.insert(t);
        }
        for c in companions.iter_mut() {
            c.faces = rng.gen_range(3..=6);
        }
        if companions.len() == 2 && rng.gen_bool(config.trap_rate) {
            companions[1].faces = companions[0].faces;
            traps.insert(Trap::TiedCompanions);
        }
        if rng.gen_bool(config.trap_rate) && busiest_week(&week).len() >= 2 {
            let a = (age as i64 + rng.gen_range(-3..=3)).max(0) as u32;
            let (g, r) = (random_gender(&mut rng), near_race(&mut rng));
            companions.push(Person { faces: 2, spread: Spread::SingleWeek, ..companion("friend", a, g, r) });
            traps.insert(Trap::SingleWeekFriend);
        }
    }
    for s in 0..rng.gen_range(0..=3) {
        let (g, r) = (random_gender(&mut rng), Race::ALL[rng.gen_range(0..3)]);
        let a = rng.gen_range(3..=75);
        companions.push(Person { faces: 1, spread: Spread::Anywhere, ..companion(&format!("s{s}"), a, g, r) });
    }

    let largest_other = companions.iter().map(|c| c.faces).max().unwrap_or(0);
    let user_faces = if plan.kind == Kind::FewFaces {
        rng.gen_range(largest_other.max(1) + 1..rule.min_faces).min(n_posts)
    } else {
        let lo = rule.min_faces.max(largest_other + 1);
        let hi = lo.max((n_posts as f64 * config.user_face_rate) as usize).min(n_posts);
        rng.gen_range(lo..=hi)
    };
    let user = Person {
        id: format!("{uid}/self"),
        age,
        gender: plan.gender,
        race: plan.race,
        faces: user_faces,
        spread: Spread::Anywhere,
    };

    // face placement; the account holder always opens the timeline
    let mut appearances: Vec<Vec<usize>> = Vec::new();
    let mut user_posts = vec![0];
    user_posts.extend(pick_spanning(&mut rng, &all[1..], user_faces - 1, &week));
    appearances.push(user_posts);
    for c in &companions {
        let posts = match c.spread {
            Spread::Recurring => pick_spanning(&mut rng, &all, c.faces, &week),
            Spread::SingleWeek => {
                let mut wk = busiest_week(&week);
                wk.shuffle(&mut rng);
                wk.truncate(c.faces);
                wk.sort_unstable();
                wk
            }
            Spread::Anywhere => pick_spanning(&mut rng, &all, c.faces, &week),
        };
        appearances.push(posts);
    }
    let people: Vec<&Person> = std::iter::once(&user).chain(companions.iter()).collect();

    // user-level happiness parameters
    let sm = &config.smiling;
    let owner = plan.ownership.is_owner();
    let dog_cat_sign = match plan.ownership {
        OwnershipLabel::DogOwner => 0.5,
        OwnershipLabel::CatOwner => -0.5,
        OwnershipLabel::None => 0.0,
    };
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let effect = sm.base
        + flag(owner) * sm.owner_gap
        + dog_cat_sign * sm.dog_cat_gap
        + flag(plan.gender == Gender::Female) * sm.female
        + flag(plan.partner) * sm.partner
        + flag(plan.child) * sm.child
        + flag(plan.race == Race::Asian) * sm.asian;
    let noise: f64 = if sm.user_sd > 0.0 { rng.sample::<f64, _>(rand_distr::StandardNormal) * sm.user_sd } else { 0.0 };
    let planted_visual = effect + noise;
    let expected_visual = planted_visual.clamp(VISUAL_TARGET_RANGE.0, VISUAL_TARGET_RANGE.1);
    let face_location = truncated_normal_location(expected_visual, sm.face_sd, 0.0, 100.0);

    let cm = &config.captions;
    let shift = flag(owner) * cm.owner_shift
        + dog_cat_sign * cm.dog_cat_shift
        + flag(plan.partner) * cm.partner_shift
        + flag(plan.child) * cm.child_shift;
    let p_pos = (cm.positive_base + shift).clamp(0.0, 1.0);
    let p_neg = (cm.negative_base - shift).clamp(0.0, 1.0 - p_pos);
    let expected_textual = p_pos * bank.pool_mean(Tone::Positive)
        + p_neg * bank.pool_mean(Tone::Negative)
        + (1.0 - p_pos - p_neg) * bank.pool_mean(Tone::Neutral);

    // materialize posts
    let start = config.start();
    let mut posts = Vec::with_capacity(n_posts);
    let mut label_records = Vec::with_capacity(n_posts);
    let mut annotations = Vec::with_capacity(n_posts);
    let mut user_smiles = Vec::with_capacity(user_faces);
    let mut caption_scores = Vec::with_capacity(n_posts);
    for i in 0..n_posts {
        let image_ref = format!("img/{uid}/{i:03}.jpg");
        let mut present: Vec<usize> = (0..people.len()).filter(|&k| appearances[k].binary_search(&i).is_ok()).collect();
        present.shuffle(&mut rng);
        let mut faces = Vec::with_capacity(present.len());
        for k in present {
            let p = people[k];
            let smiling = if k == 0 {
                truncated_normal(&mut rng, face_location, sm.face_sd, 0.0, 100.0)
            } else {
                truncated_normal(&mut rng, sm.others_mean, sm.others_sd, 0.0, 100.0)
            };
            // two decimals like a face service would report
            let smiling = (smiling * 100.0).round() / 100.0;
            if k == 0 {
                user_smiles.push(smiling);
            }
            faces.push(AnnotatedFace {
                person_id: p.id.clone(),
                bbox: BBox {
                    x: rng.gen_range(0..800),
                    y: rng.gen_range(0..800),
                    w: rng.gen_range(40..240),
                    h: rng.gen_range(40..240),
                },
                age: p.age as f64,
                gender: p.gender,
                race: p.race,
                smiling,
            });
        }

        let u: f64 = rng.gen();
        let tone = if u < p_pos {
            Tone::Positive
        } else if u < p_pos + p_neg {
            Tone::Negative
        } else {
            Tone::Neutral
        };
        let pool = bank.pool(tone);
        let (caption, score) = pool[rng.gen_range(0..pool.len())];
        caption_scores.push(score);

        let mut hashtags = BTreeSet::new();
        match labels[i] {
            PetLabel::Dog => {
                hashtags.insert("dogsofinstagram".to_string());
            }
            PetLabel::Cat => {
                hashtags.insert("catsofinstagram".to_string());
            }
            PetLabel::Other => {
                for _ in 0..rng.gen_range(0..=2) {
                    hashtags.insert(HASHTAGS[rng.gen_range(0..HASHTAGS.len())].to_string());
                }
            }
        }

        posts.push(Post {
            post_id: format!("{uid}-{i:03}"),
            user_id: uid.clone(),
            timestamp: start + Duration::seconds(offsets[i]),
            image_ref: image_ref.clone(),
            caption: caption.to_string(),
            hashtags,
        });
        label_records.push(LabelRecord { image_ref: image_ref.clone(), label: labels[i] });
        annotations.push(AnnotationRecord { image_ref, faces });
    }

    let eligibility = rule.check(n_posts, user_faces);
    let drop_reason = match eligibility {
        Eligibility::Keep => None,
        Eligibility::Drop(r) => Some(r),
    };
    debug_assert_eq!(drop_reason.is_none(), plan.kind == Kind::Eligible);
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);

    UserData {
        posts,
        labels: label_records,
        annotations,
        truth: TruthRecord {
            user_id: uid.clone(),
            eligible: drop_reason.is_none(),
            drop_reason,
            ownership: plan.ownership,
            has_partner: plan.partner,
            has_child: plan.child,
            demographics: Demographics { age: age as f64, gender: plan.gender, race: plan.race },
            planted_visual,
            expected_visual,
            realized_visual: mean(&user_smiles),
            expected_textual,
            realized_textual: mean(&caption_scores).unwrap_or(0.0),
            post_count: n_posts,
            user_faces,
            traps: traps.into_iter().collect(),
        },
    }
}

/// Generates a corpus. Identical configs give identical output.
pub fn generate_corpus(config: &SynthConfig) -> Result<SynthOutput, SynthError> {
    config.validate()?;
    let bank = CaptionBank::new(&Analyzer::default());
    let mut plans = plan_users(config);
    plans.sort_by(|a, b| a.user_id.cmp(&b.user_id));

    let mut out = SynthOutput {
        config: config.clone(),
        posts: Vec::new(),
        labels: Vec::new(),
        annotations: Vec::new(),
        truth: GroundTruth::default(),
    };
    for plan in &plans {
        let u = generate_user(config, &bank, plan);
        out.posts.extend(u.posts);
        out.labels.extend(u.labels);
        out.annotations.extend(u.annotations);
        out.truth.records.push(u.truth);
    }
    out.truth.strata = strata(&out.truth.records);
    Ok(out)
}
