//! Timeline data model, newline-delimited corpus ingestion, calendar-week
//! windowing and the user eligibility filter.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};

use chrono::{DateTime, Datelike, NaiveDateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("failed to read corpus stream: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to serialize record: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// One timeline item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub post_id: String,
    pub user_id: String,
    pub timestamp: DateTime<Utc>,
    pub image_ref: String,
    #[serde(default)]
    pub caption: String,
    #[serde(default)]
    pub hashtags: BTreeSet<String>,
}

/// A user's posts in ascending timestamp order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timeline {
    pub user_id: String,
    pub posts: Vec<Post>,
}

impl Timeline {
    /// Builds a timeline, sorting posts by `(timestamp, post_id)`.
    ///
    /// Posts belonging to another user are discarded.
    pub fn new(user_id: impl Into<String>, posts: impl IntoIterator<Item = Post>) -> Self {
        let user_id = user_id.into();
        let mut posts: Vec<Post> = posts.into_iter().filter(|p| p.user_id == user_id).collect();
        posts.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.post_id.cmp(&b.post_id)));
        Self { user_id, posts }
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    /// Span covered by the timeline, `None` when empty.
    pub fn period(&self) -> Option<(DateTime<Utc>, DateTime<Utc>)> {
        Some((self.posts.first()?.timestamp, self.posts.last()?.timestamp))
    }
}

/// An ISO-8601 calendar week. Ordered by `(iso_year, iso_week)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WindowId {
    pub iso_year: i32,
    pub iso_week: u32,
}

impl WindowId {
    pub fn of(ts: &DateTime<Utc>) -> Self {
        let w = ts.iso_week();
        Self { iso_year: w.year(), iso_week: w.week() }
    }
}

impl fmt::Display for WindowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-W{:02}", self.iso_year, self.iso_week)
    }
}

/// Distinct ISO weeks touched by `timestamps`.
pub fn week_windows<'a, I>(timestamps: I) -> BTreeSet<WindowId>
where
    I: IntoIterator<Item = &'a DateTime<Utc>>,
{
    timestamps.into_iter().map(WindowId::of).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    TooFewPosts,
    TooFewFaces,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::TooFewPosts => "too_few_posts",
            DropReason::TooFewFaces => "too_few_faces",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eligibility {
    Keep,
    Drop(DropReason),
}

/// Minimum timeline size and user-face count for a user to be analyzed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EligibilityRule {
    pub min_posts: usize,
    pub min_faces: usize,
}

impl Default for EligibilityRule {
    fn default() -> Self {
        Self { min_posts: 25, min_faces: 5 }
    }
}

impl EligibilityRule {
    /// Post count is checked before face count; both bounds are inclusive.
    pub fn check(&self, post_count: usize, user_face_count: usize) -> Eligibility {
        if post_count < self.min_posts {
            Eligibility::Drop(DropReason::TooFewPosts)
        } else if user_face_count < self.min_faces {
            Eligibility::Drop(DropReason::TooFewFaces)
        } else {
            Eligibility::Keep
        }
    }
}

/// Eligibility with the default thresholds (25 posts, 5 user faces).
pub fn filter_eligible(timeline: &Timeline, user_face_count: usize) -> Eligibility {
    EligibilityRule::default().check(timeline.len(), user_face_count)
}

/// Accepted/rejected record counts from one ingest pass.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub records_total: u64,
    pub accepted: u64,
    pub rejected_malformed: u64,
    pub rejected_duplicate: u64,
    /// `(accepted, rejected)` per user id. Records too broken to yield a
    /// user id only show up in the global counters.
    pub per_user: BTreeMap<String, (u64, u64)>,
}

impl IngestReport {
    pub fn rejected(&self) -> u64 {
        self.rejected_malformed + self.rejected_duplicate
    }

    /// Flat `key=value` summary, one entry per line.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("records_total={}\n", self.records_total));
        out.push_str(&format!("accepted={}\n", self.accepted));
        out.push_str(&format!("rejected={}\n", self.rejected()));
        out.push_str(&format!("rejected_malformed={}\n", self.rejected_malformed));
        out.push_str(&format!("rejected_duplicate={}\n", self.rejected_duplicate));
        out.push_str(&format!("users={}\n", self.per_user.len()));
        for (user, (ok, bad)) in &self.per_user {
            out.push_str(&format!("user.{user}.accepted={ok}\n"));
            out.push_str(&format!("user.{user}.rejected={bad}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub timelines: BTreeMap<String, Timeline>,
    pub report: IngestReport,
}

impl Corpus {
    pub fn post_count(&self) -> usize {
        self.timelines.values().map(Timeline::len).sum()
    }
}

/// Reads newline-delimited post records.
///
/// Malformed lines are counted and skipped; only a failing reader aborts.
/// Duplicate `post_id`s keep the first occurrence.
pub fn ingest_corpus<R: BufRead>(reader: R) -> Result<Corpus, CorpusError> {
    let mut report = IngestReport::default();
    let mut seen = HashSet::new();
    let mut by_user: BTreeMap<String, Vec<Post>> = BTreeMap::new();

    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        report.records_total += 1;
        match parse_record(&line) {
            Ok(post) => {
                let entry = report.per_user.entry(post.user_id.clone()).or_default();
                if seen.insert(post.post_id.clone()) {
                    entry.0 += 1;
                    report.accepted += 1;
                    by_user.entry(post.user_id.clone()).or_default().push(post);
                } else {
                    entry.1 += 1;
                    report.rejected_duplicate += 1;
                }
            }
            Err(user) => {
                report.rejected_malformed += 1;
                if let Some(user) = user {
                    report.per_user.entry(user).or_default().1 += 1;
                }
                log::debug!("skipping malformed corpus record: {line}");
            }
        }
    }

    let timelines = by_user
        .into_iter()
        .map(|(user, posts)| (user.clone(), Timeline::new(user, posts)))
        .collect();
    Ok(Corpus { timelines, report })
}

/// Writes timelines back as newline-delimited records, users in key order.
pub fn write_corpus<'a, W, I>(timelines: I, mut out: W) -> Result<(), CorpusError>
where
    W: Write,
    I: IntoIterator<Item = &'a Timeline>,
{
    for tl in timelines {
        for post in &tl.posts {
            serde_json::to_writer(&mut out, post)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Parses one record. On failure returns the user id if one could be read.
fn parse_record(line: &str) -> Result<Post, Option<String>> {
    let value: Value = serde_json::from_str(line).map_err(|_| None)?;
    let obj = value.as_object().ok_or(None)?;
    let text = |key: &str| obj.get(key).and_then(Value::as_str).map(str::to_owned);

    let user_id = text("user_id").filter(|u| !u.is_empty()).ok_or(None)?;
    let fail = || Some(user_id.clone());

    let post_id = text("post_id").filter(|p| !p.is_empty()).ok_or_else(fail)?;
    let timestamp = text("timestamp").and_then(|t| parse_timestamp(&t)).ok_or_else(fail)?;
    let image_ref = text("image_ref").ok_or_else(fail)?;
    let caption = match obj.get("caption") {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(fail()),
    };
    let hashtags = match obj.get("hashtags") {
        None | Some(Value::Null) => BTreeSet::new(),
        Some(Value::Array(items)) => {
            let mut tags = BTreeSet::new();
            for item in items {
                let tag = item.as_str().ok_or_else(fail)?;
                let tag = normalize_hashtag(tag);
                if !tag.is_empty() {
                    tags.insert(tag);
                }
            }
            tags
        }
        Some(_) => return Err(fail()),
    };

    Ok(Post { post_id, user_id, timestamp, image_ref, caption, hashtags })
}

/// Lowercases and strips leading `#` characters.
pub fn normalize_hashtag(tag: &str) -> String {
    tag.trim().trim_start_matches('#').to_lowercase()
}

/// RFC 3339 with any offset, or a bare `YYYY-MM-DDTHH:MM:SS` taken as UTC.
/// Sub-second precision is dropped.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    let ts = match DateTime::parse_from_rfc3339(raw) {
        Ok(dt) => dt.with_timezone(&Utc),
        Err(_) => NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S")
            .or_else(|_| NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S"))
            .ok()?
            .and_utc(),
    };
    Some(ts.trunc_subsecs(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> DateTime<Utc> {
        parse_timestamp(s).unwrap()
    }

    fn record(post: &str, user: &str, t: &str) -> String {
        format!(
            r##"{{"post_id":"{post}","user_id":"{user}","timestamp":"{t}","image_ref":"img/{post}.jpg","caption":"hi","hashtags":["#MyDog"]}}"##
        )
    }

    #[test]
    fn ingest_sorts_shuffled_posts() {
        let lines = [
            record("p2", "u1", "2017-01-03T10:00:00Z"),
            record("p3", "u1", "2017-01-04T10:00:00Z"),
            record("p1", "u1", "2017-01-02T10:00:00Z"),
        ]
        .join("\n");
        let corpus = ingest_corpus(lines.as_bytes()).unwrap();
        let tl = &corpus.timelines["u1"];
        let ids: Vec<_> = tl.posts.iter().map(|p| p.post_id.as_str()).collect();
        assert_eq!(ids, ["p1", "p2", "p3"]);
        assert!(tl.posts[0].hashtags.contains("mydog"));
    }

    #[test]
    fn duplicate_post_id_is_dropped_and_counted() {
        let lines = [
            record("p1", "u1", "2017-01-02T10:00:00Z"),
            record("p1", "u1", "2017-01-05T10:00:00Z"),
        ]
        .join("\n");
        let corpus = ingest_corpus(lines.as_bytes()).unwrap();
        assert_eq!(corpus.timelines["u1"].len(), 1);
        assert_eq!(corpus.report.rejected(), 1);
        assert_eq!(corpus.report.per_user["u1"], (1, 1));
        // first occurrence wins
        assert_eq!(corpus.timelines["u1"].posts[0].timestamp, ts("2017-01-02T10:00:00Z"));
    }

    #[test]
    fn partitions_by_user() {
        let lines = [
            record("a", "u1", "2017-01-02T10:00:00Z"),
            record("b", "u2", "2017-01-02T11:00:00Z"),
            record("c", "u1", "2017-01-02T12:00:00Z"),
        ]
        .join("\n");
        let corpus = ingest_corpus(lines.as_bytes()).unwrap();
        assert_eq!(corpus.timelines.len(), 2);
        assert_eq!(corpus.timelines["u1"].len(), 2);
        assert_eq!(corpus.timelines["u2"].len(), 1);
    }

    #[test]
    fn malformed_records_are_skipped() {
        let lines = [
            "not json".to_string(),
            r#"{"post_id":"x","user_id":"u9","timestamp":"yesterday","image_ref":"i"}"#.to_string(),
            r#"{"post_id":"y","user_id":"u9","timestamp":"2017-01-02T10:00:00Z","image_ref":"i","hashtags":"nope"}"#
                .to_string(),
            record("ok", "u9", "2017-01-02T10:00:00+02:00"),
        ]
        .join("\n");
        let corpus = ingest_corpus(lines.as_bytes()).unwrap();
        assert_eq!(corpus.report.records_total, 4);
        assert_eq!(corpus.report.rejected_malformed, 3);
        assert_eq!(corpus.report.per_user["u9"], (1, 2));
        // offset normalized to UTC
        assert_eq!(corpus.timelines["u9"].posts[0].timestamp, ts("2017-01-02T08:00:00Z"));
        let kv = corpus.report.to_kv();
        assert!(kv.contains("rejected_malformed=3\n"));
        assert!(kv.contains("user.u9.accepted=1\n"));
    }

    #[test]
    fn unreadable_stream_is_fatal() {
        struct Broken;
        impl std::io::Read for Broken {
            fn read(&mut self, _: &mut [u8]) -> std::io::Result<usize> {
                Err(std::io::Error::other("disk on fire"))
            }
        }
        let err = ingest_corpus(std::io::BufReader::new(Broken)).unwrap_err();
        assert!(matches!(err, CorpusError::Io(_)));
    }

    #[test]
    fn naive_timestamps_are_utc_and_truncated() {
        assert_eq!(ts("2017-01-02T10:00:00"), ts("2017-01-02T10:00:00Z"));
        assert_eq!(ts("2017-01-02T10:00:00.987Z"), ts("2017-01-02T10:00:00Z"));
        assert!(parse_timestamp("2017-13-02T10:00:00Z").is_none());
    }

    #[test]
    fn week_windows_examples() {
        assert!(week_windows(&[]).is_empty());
        let one = week_windows(&[ts("2017-01-02T10:00:00Z"), ts("2017-01-05T09:00:00Z")]);
        assert_eq!(one.into_iter().collect::<Vec<_>>(), [WindowId { iso_year: 2017, iso_week: 1 }]);
        let two = week_windows(&[ts("2017-01-02T10:00:00Z"), ts("2017-01-10T09:00:00Z")]);
        assert_eq!(
            two.into_iter().collect::<Vec<_>>(),
            [WindowId { iso_year: 2017, iso_week: 1 }, WindowId { iso_year: 2017, iso_week: 2 }]
        );
    }

    #[test]
    fn eligibility_examples() {
        let rule = EligibilityRule::default();
        assert_eq!(rule.check(24, 10), Eligibility::Drop(DropReason::TooFewPosts));
        assert_eq!(rule.check(30, 4), Eligibility::Drop(DropReason::TooFewFaces));
        assert_eq!(rule.check(25, 5), Eligibility::Keep);
        // post count is checked first
        assert_eq!(rule.check(3, 0), Eligibility::Drop(DropReason::TooFewPosts));
    }
}
