//! Report emitters: demographic cross-tabulation, factor distributions,
//! comparison tables and per-group chart series.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::faceclient::{Gender, Race};
use crate::inference::UserProfile;
use crate::stats::{compare_subgroups, group_summaries, partition, ComparisonTable, Factor, GroupSummary, Metric, StatsError, Stratum};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no profiles to report on")]
    NoProfiles,
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Table rows and columns in display order.
pub const GENDER_ROWS: [Gender; 2] = [Gender::Male, Gender::Female];
pub const RACE_COLUMNS: [Race; 3] = [Race::Asian, Race::AfricanAmerican, Race::Caucasian];

/// Gender by race user counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemographicTable {
    /// `counts[g][r]` in [`GENDER_ROWS`] by [`RACE_COLUMNS`] order.
    pub counts: [[u64; 3]; 2],
}

impl DemographicTable {
    pub fn from_profiles(profiles: &[UserProfile]) -> Self {
        let mut t = Self::default();
        for p in profiles {
            let g = GENDER_ROWS.iter().position(|g| *g == p.demographics.gender).expect("listed");
            let r = RACE_COLUMNS.iter().position(|r| *r == p.demographics.race).expect("listed");
            t.counts[g][r] += 1;
        }
        t
    }

    pub fn row_sums(&self) -> [u64; 2] {
        self.counts.map(|row| row.iter().sum())
    }

    pub fn column_sums(&self) -> [u64; 3] {
        [0, 1, 2].map(|r| self.counts[0][r] + self.counts[1][r])
    }

    pub fn total(&self) -> u64 {
        self.row_sums().iter().sum()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("gender");
        for r in RACE_COLUMNS {
            out.push('\t');
            out.push_str(r.as_str());
        }
        out.push_str("\tsum\n");
        for (g, row) in GENDER_ROWS.iter().zip(&self.counts) {
            let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", g.as_str(), row[0], row[1], row[2], row.iter().sum::<u64>());
        }
        let c = self.column_sums();
        let _ = writeln!(out, "sum\t{}\t{}\t{}\t{}", c[0], c[1], c[2], self.total());
        out
    }
}

/// User count of one factor level, overall and within each ownership
/// stratum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub factor: Factor,
    pub level: String,
    pub all: usize,
    pub pet_owners: usize,
    pub non_owners: usize,
}

pub const DISTRIBUTION_FACTORS: [Factor; 3] = [Factor::Pet, Factor::Partner, Factor::Child];

pub fn distributions(profiles: &[UserProfile]) -> Vec<DistributionRow> {
    let mut rows = Vec::new();
    for factor in DISTRIBUTION_FACTORS {
        let cells = Stratum::ALL.map(|s| partition(profiles, factor, s));
        for (i, level) in factor.levels().iter().enumerate() {
            rows.push(DistributionRow {
                factor,
                level: level.to_string(),
                all: cells[0][i].1.len(),
                pet_owners: cells[1][i].1.len(),
                non_owners: cells[2][i].1.len(),
            });
        }
    }
    rows
}

pub fn distributions_tsv(rows: &[DistributionRow]) -> String {
    let mut out = String::from("factor\tlevel\tall\tpet_owners\tnon_owners\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", r.factor, r.level, r.all, r.pet_owners, r.non_owners);
    }
    out
}

/// Per-group mean series for one factor, stratum and metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSeries {
    pub factor: Factor,
    pub stratum: Stratum,
    pub metric: Metric,
    pub rows: Vec<GroupSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ChartSeries {
    pub const HEADER: &'static str = "group\tmean\tcount\tstd";

    /// Values are printed at full round-trip precision.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{}\t{:?}\t{}\t{:?}", r.label, r.mean, r.count, r.std);
        }
        for w in &self.warnings {
            let _ = writeln!(out, "# warning: {w}");
        }
        out
    }
}

/// One row per non-empty level of `factor` among profiles admitted by
/// `stratum`; empty levels are omitted with a warning.
pub fn emit_chart_data(
    profiles: &[UserProfile],
    factor: Factor,
    stratum: Stratum,
    metric: Metric,
) -> Result<ChartSeries, ReportError> {
    if profiles.is_empty() {
        return Err(ReportError::NoProfiles);
    }
    let (rows, warnings) = group_summaries(profiles, factor, stratum, metric);
    for w in &warnings {
        log::debug!("{w}");
    }
    Ok(ChartSeries { factor, stratum, metric, rows, warnings })
}

/// Factor and stratum pairs where the stratum can hold two or more levels.
pub fn comparison_plan() -> Vec<(Factor, Stratum)> {
    let mut plan = Vec::new();
    for factor in Factor::ALL {
        for stratum in Stratum::ALL {
            let skip = match factor {
                Factor::Owner => stratum != Stratum::All,
                Factor::Pet => stratum == Stratum::NonOwners,
                _ => false,
            };
            if !skip {
                plan.push((factor, stratum));
            }
        }
    }
    plan
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSet {
    pub demographics: DemographicTable,
    pub distributions: Vec<DistributionRow>,
    pub comparisons: Vec<ComparisonTable>,
    pub charts: Vec<ChartSeries>,
}

pub fn build_reports(profiles: &[UserProfile], alpha: f64) -> Result<ReportSet, ReportError> {
    if profiles.is_empty() {
        return Err(ReportError::NoProfiles);
    }
    let mut comparisons = Vec::new();
    let mut charts = Vec::new();
    for (factor, stratum) in comparison_plan() {
        for metric in Metric::ALL {
            comparisons.push(compare_subgroups(profiles, factor, stratum, metric, alpha)?);
            charts.push(emit_chart_data(profiles, factor, stratum, metric)?);
        }
    }
    Ok(ReportSet {
        demographics: DemographicTable::from_profiles(profiles),
        distributions: distributions(profiles),
        comparisons,
        charts,
    })
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, ReportError> {
    std::fs::write(&path, contents).map_err(|source| ReportError::Io { path: path.clone(), source })?;
    Ok(path)
}

fn json_lines<T: Serialize>(items: &[T]) -> Result<String, ReportError> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

impl ReportSet {
    /// Writes every table as text plus a JSON dual. Returns the paths
    /// written, relative order fixed.
    pub fn write_to_dir(&self, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
        let cmp_dir = dir.join("comparisons");
        std::fs::create_dir_all(&cmp_dir).map_err(|source| ReportError::Io { path: cmp_dir.clone(), source })?;
        let mut files = vec![
            write(dir.join("demographics.tsv"), &self.demographics.to_tsv())?,
            write(dir.join("demographics.json"), &(serde_json::to_string_pretty(&self.demographics)? + "\n"))?,
            write(dir.join("distributions.tsv"), &distributions_tsv(&self.distributions))?,
            write(dir.join("distributions.json"), &(serde_json::to_string_pretty(&self.distributions)? + "\n"))?,
        ];
        for t in &self.comparisons {
            let name = format!("{}_{}_{}.tsv", t.factor, t.stratum, t.metric);
            files.push(write(cmp_dir.join(name), &t.to_tsv())?);
        }
        files.push(write(dir.join("comparisons.ndjson"), &json_lines(&self.comparisons)?)?);

        let mut chart = String::from("factor\tstratum\tmetric\t");
        chart.push_str(ChartSeries::HEADER);
        chart.push('\n');
        for c in &self.charts {
            for line in c.to_tsv().lines().skip(1).filter(|l| !l.starts_with('#')) {
                let _ = writeln!(chart, "{}\t{}\t{}\t{line}", c.factor, c.stratum, c.metric);
            }
        }
        files.push(write(dir.join("chart_data.tsv"), &chart)?);
        files.push(write(dir.join("chart_data.ndjson"), &json_lines(&self.charts)?)?);
        Ok(files)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::Demographics;
    use crate::petclass::OwnershipLabel;

    fn profile(i: usize, gender: Gender, race: Race, ownership: OwnershipLabel, visual: f64) -> UserProfile {
        UserProfile {
            user_id: format!("u{i:03}"),
            demographics: Demographics { age: 30.0, gender, race },
            ownership,
            has_partner: i % 3 == 0,
            has_child: i % 4 == 0,
            visual_happiness: visual,
            textual_happiness: 0.0,
            face_count: 5,
            post_count: 25,
        }
    }

    #[test]
    fn demographic_table_shape_and_marginals() {
        let ps = vec![
            profile(0, Gender::Male, Race::Asian, OwnershipLabel::None, 1.0),
            profile(1, Gender::Female, Race::Asian, OwnershipLabel::None, 1.0),
            profile(2, Gender::Female, Race::Caucasian, OwnershipLabel::DogOwner, 1.0),
        ];
        let t = DemographicTable::from_profiles(&ps);
        assert_eq!(
            t.to_tsv(),
            "gender\tasian\tafrican_american\tcaucasian\tsum\n\
             male\t1\t0\t0\t1\n\
             female\t1\t0\t1\t2\n\
             sum\t2\t0\t1\t3\n"
        );
    }

    #[test]
    fn chart_rows_for_constant_groups() {
        let mut ps: Vec<UserProfile> =
            (0..3).map(|i| profile(i, Gender::Male, Race::Asian, OwnershipLabel::DogOwner, 10.0)).collect();
        ps.extend((3..5).map(|i| profile(i, Gender::Male, Race::Asian, OwnershipLabel::CatOwner, 20.0)));
        let c = emit_chart_data(&ps, Factor::Pet, Stratum::All, Metric::Visual).unwrap();
        assert_eq!(c.to_tsv(), "group\tmean\tcount\tstd\ndog\t10.0\t3\t0.0\ncat\t20.0\t2\t0.0\n# warning: pet/all: level none has no users\n");
        let owners = emit_chart_data(&ps, Factor::Gender, Stratum::PetOwners, Metric::Visual).unwrap();
        assert_eq!(owners.rows.iter().map(|r| r.count).sum::<usize>(), 5);
        assert!(matches!(emit_chart_data(&[], Factor::Pet, Stratum::All, Metric::Visual), Err(ReportError::NoProfiles)));
    }

    #[test]
    fn distributions_partition_every_stratum() {
        let ps: Vec<UserProfile> = (0..12)
            .map(|i| {
                let o = [OwnershipLabel::DogOwner, OwnershipLabel::CatOwner, OwnershipLabel::None][i % 3];
                profile(i, Gender::Female, Race::Caucasian, o, i as f64)
            })
            .collect();
        let rows = distributions(&ps);
        for f in DISTRIBUTION_FACTORS {
            let of: Vec<_> = rows.iter().filter(|r| r.factor == f).collect();
            assert_eq!(of.iter().map(|r| r.all).sum::<usize>(), 12);
            assert_eq!(of.iter().map(|r| r.pet_owners + r.non_owners).sum::<usize>(), 12);
        }
    }

    #[test]
    fn plan_skips_single_level_strata() {
        let plan = comparison_plan();
        assert!(!plan.contains(&(Factor::Pet, Stratum::NonOwners)));
        assert!(plan.contains(&(Factor::Pet, Stratum::PetOwners)));
        assert_eq!(plan.iter().filter(|(f, _)| *f == Factor::Owner).count(), 1);
    }
}
