//! Factor partitions of user profiles and the comparison tables built on
//! them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::tukey::{format_p, tukey_kramer, ComparisonResult, GroupSample};
use super::StatsError;
use crate::faceclient::{Gender, Race};
use crate::inference::UserProfile;
use crate::petclass::OwnershipLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Mean smiling confidence, `H_t`.
    Visual,
    /// Mean caption compound score, `C_t`.
    Textual,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Visual, Metric::Textual];

    pub fn value(self, p: &UserProfile) -> f64 {
        match self {
            Metric::Visual => p.visual_happiness,
            Metric::Textual => p.textual_happiness,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Visual => "visual",
            Metric::Textual => "textual",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Metric::Visual => "H_t",
            Metric::Textual => "C_t",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "visual" | "h_t" | "h" | "smiling" => Ok(Metric::Visual),
            "textual" | "c_t" | "c" | "caption" => Ok(Metric::Textual),
            _ => Err(format!("unknown metric {s:?} (expected visual or textual)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    /// dog / cat / none
    Pet,
    /// pet (dog or cat) / none
    Owner,
    Gender,
    Race,
    Partner,
    Child,
}

impl Factor {
    pub const ALL: [Factor; 6] = [Factor::Pet, Factor::Owner, Factor::Gender, Factor::Race, Factor::Partner, Factor::Child];

    pub fn levels(self) -> &'static [&'static str] {
        match self {
            Factor::Pet => &["dog", "cat", "none"],
            Factor::Owner => &["pet", "none"],
            Factor::Gender => &["female", "male"],
            Factor::Race => &["asian", "african_american", "caucasian"],
            Factor::Partner => &["partner", "no_partner"],
            Factor::Child => &["child", "no_child"],
        }
    }

    pub fn level_of(self, p: &UserProfile) -> &'static str {
        match self {
            Factor::Pet => match p.ownership {
                OwnershipLabel::DogOwner => "dog",
                OwnershipLabel::CatOwner => "cat",
                OwnershipLabel::None => "none",
            },
            Factor::Owner => {
                if p.ownership.is_owner() {
                    "pet"
                } else {
                    "none"
                }
            }
            Factor::Gender => match p.demographics.gender {
                Gender::Female => "female",
                Gender::Male => "male",
            },
            Factor::Race => match p.demographics.race {
                Race::Asian => "asian",
                Race::AfricanAmerican => "african_american",
                Race::Caucasian => "caucasian",
            },
            Factor::Partner => {
                if p.has_partner {
                    "partner"
                } else {
                    "no_partner"
                }
            }
            Factor::Child => {
                if p.has_child {
                    "child"
                } else {
                    "no_child"
                }
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Factor::Pet => "pet",
            Factor::Owner => "owner",
            Factor::Gender => "gender",
            Factor::Race => "race",
            Factor::Partner => "partner",
            Factor::Child => "child",
        }
    }

    /// Ownership factors are only meaningful over the whole population.
    pub fn is_ownership(self) -> bool {
        matches!(self, Factor::Pet | Factor::Owner)
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Factor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Factor::ALL
            .into_iter()
            .find(|f| f.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown factor {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    All,
    PetOwners,
    NonOwners,
}

impl Stratum {
    pub const ALL: [Stratum; 3] = [Stratum::All, Stratum::PetOwners, Stratum::NonOwners];

    pub fn admits(self, p: &UserProfile) -> bool {
        match self {
            Stratum::All => true,
            Stratum::PetOwners => p.ownership.is_owner(),
            Stratum::NonOwners => !p.ownership.is_owner(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stratum::All => "all",
            Stratum::PetOwners => "pet_owners",
            Stratum::NonOwners => "non_owners",
        }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stratum {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stratum::ALL
            .into_iter()
            .find(|x| x.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown stratum {s:?}"))
    }
}

/// Profiles admitted by `stratum`, bucketed by factor level in level order.
/// Empty levels are kept.
pub fn partition<'a>(
    profiles: &'a [UserProfile],
    factor: Factor,
    stratum: Stratum,
) -> Vec<(&'static str, Vec<&'a UserProfile>)> {
    let mut cells: Vec<(&'static str, Vec<&UserProfile>)> = factor.levels().iter().map(|l| (*l, Vec::new())).collect();
    for p in profiles.iter().filter(|p| stratum.admits(p)) {
        let level = factor.level_of(p);
        let cell = cells.iter_mut().find(|(l, _)| *l == level).expect("level_of returns a declared level");
        cell.1.push(p);
    }
    cells
}

fn samples(profiles: &[UserProfile], factor: Factor, stratum: Stratum, metric: Metric) -> Vec<GroupSample> {
    partition(profiles, factor, stratum)
        .into_iter()
        .map(|(label, ps)| GroupSample::new(label, ps.iter().map(|p| metric.value(p)).collect()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub mean: f64,
    pub count: usize,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

/// Per-level mean, count and spread. Empty levels are omitted and reported
/// in the returned warnings.
pub fn group_summaries(
    profiles: &[UserProfile],
    factor: Factor,
    stratum: Stratum,
    metric: Metric,
) -> (Vec<GroupSummary>, Vec<String>) {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for g in samples(profiles, factor, stratum, metric) {
        if g.values.is_empty() {
            warnings.push(format!("{factor}/{stratum}: level {} has no users", g.label));
            continue;
        }
        let mean = g.mean();
        let n = g.values.len();
        let std = if n > 1 {
            (g.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        rows.push(GroupSummary { label: g.label, mean, count: n, std });
    }
    (rows, warnings)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub pair: (String, String),
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub factor: Factor,
    pub stratum: Stratum,
    pub metric: Metric,
    pub alpha: f64,
    pub rows: Vec<ComparisonResult>,
    pub skipped: Vec<SkippedPair>,
    pub warnings: Vec<String>,
}

impl ComparisonTable {
    pub const HEADER: &'static str = "categories\tlower\test_mean_diff\tupper\tp_val";

    /// Tab-separated rows in table order; skipped pairs and warnings follow
    /// as `#` comment lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{}\t{:.4}\t{:.4}\t{:.4}\t{}\n",
                r.categories(),
                r.lower,
                r.est_mean_diff,
                r.upper,
                format_p(r.p_value)
            ));
        }
        for s in &self.skipped {
            out.push_str(&format!("# skipped {}-{}: {}\n", s.pair.0, s.pair.1, s.reason));
        }
        for w in &self.warnings {
            out.push_str(&format!("# warning: {w}\n"));
        }
        out
    }
}

/// Tukey–Kramer over the factor levels present in `stratum`. Levels with
/// fewer than two users are left out of the test and their pairs reported
/// as skipped.
pub fn compare_subgroups(
    profiles: &[UserProfile],
    factor: Factor,
    stratum: Stratum,
    metric: Metric,
    alpha: f64,
) -> Result<ComparisonTable, StatsError> {
    let groups = samples(profiles, factor, stratum, metric);
    let mut table = ComparisonTable {
        factor,
        stratum,
        metric,
        alpha,
        rows: Vec::new(),
        skipped: Vec::new(),
        warnings: Vec::new(),
    };
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let small: Vec<String> = [&groups[i], &groups[j]]
                .iter()
                .filter(|g| g.values.len() < 2)
                .map(|g| format!("{} has {} user(s)", g.label, g.values.len()))
                .collect();
            if !small.is_empty() {
                table.skipped.push(SkippedPair {
                    pair: (groups[i].label.clone(), groups[j].label.clone()),
                    reason: small.join(", "),
                });
            }
        }
    }
    let usable: Vec<GroupSample> = groups.into_iter().filter(|g| g.values.len() >= 2).collect();
    if usable.len() < 2 {
        table.warnings.push(format!("{factor}/{stratum}: fewer than two levels with at least 2 users"));
        return Ok(table);
    }
    table.rows = tukey_kramer(&usable, alpha)?;
    Ok(table)
}
