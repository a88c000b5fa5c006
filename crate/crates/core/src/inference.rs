//! User identification, demographics, and partner/child inference from
//! face groups.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::corpus::week_windows;
use crate::faceclient::{group_rank_order, FaceGroup, Gender, Race};
use crate::petclass::OwnershipLabel;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InferenceError {
    #[error("face group is empty")]
    EmptyGroup,
    #[error("no non-empty face group to identify the user from")]
    NoGroups,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    /// Median member age.
    pub age: f64,
    pub gender: Gender,
    pub race: Race,
}

/// Median age and plurality gender/race of a group. Plurality ties go to the
/// value seen first in member order.
pub fn group_demographics(group: &FaceGroup) -> Result<Demographics, InferenceError> {
    if group.is_empty() {
        return Err(InferenceError::EmptyGroup);
    }
    let ages: Vec<f64> = group.members.iter().map(|m| m.age).collect();
    Ok(Demographics {
        age: median(&ages).expect("non-empty"),
        gender: plurality(group.members.iter().map(|m| m.gender)).expect("non-empty"),
        race: plurality(group.members.iter().map(|m| m.race)).expect("non-empty"),
    })
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

fn plurality<T: Copy + Eq + Hash>(values: impl Iterator<Item = T>) -> Option<T> {
    // value -> (count, first position)
    let mut tally: HashMap<T, (usize, usize)> = HashMap::new();
    for (pos, v) in values.enumerate() {
        tally.entry(v).or_insert((0, pos)).0 += 1;
    }
    tally
        .into_iter()
        .max_by(|(_, (ca, pa)), (_, (cb, pb))| ca.cmp(cb).then(pb.cmp(pa)))
        .map(|(v, _)| v)
}

/// Index of the user's group: the largest, ties to the earliest first
/// appearance, then to input order.
pub fn identify_user_index(groups: &[FaceGroup]) -> Result<usize, InferenceError> {
    groups
        .iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .min_by(|(ia, a), (ib, b)| group_rank_order(a, b).then(ia.cmp(ib)))
        .map(|(i, _)| i)
        .ok_or(InferenceError::NoGroups)
}

pub fn identify_user(groups: &[FaceGroup]) -> Result<&FaceGroup, InferenceError> {
    identify_user_index(groups).map(|i| &groups[i])
}

/// Which non-user groups are considered as partner/child candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CandidateScope {
    /// Only the groups ranked 2nd..=`last_rank` by size (the user is rank 1).
    TopRanks { last_rank: usize },
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelationshipRule {
    pub scope: CandidateScope,
    pub min_windows: usize,
    /// Partner needs an absolute age gap strictly below this.
    pub partner_max_age_gap: f64,
    /// The user must be strictly older than this to have a child.
    pub adult_age: f64,
    /// The child must be younger than the user by strictly more than this.
    pub child_min_age_gap: f64,
}

impl Default for RelationshipRule {
    fn default() -> Self {
        Self {
            scope: CandidateScope::TopRanks { last_rank: 3 },
            min_windows: 2,
            partner_max_age_gap: 5.0,
            adult_age: 18.0,
            child_min_age_gap: 18.0,
        }
    }
}

impl RelationshipRule {
    /// Groups other than `user_index` that fall within the candidate scope.
    /// `groups` must already be in rank order.
    pub fn candidates<'a>(&self, groups: &'a [FaceGroup], user_index: usize) -> Vec<&'a FaceGroup> {
        let others = groups.iter().enumerate().filter(|(i, g)| *i != user_index && !g.is_empty()).map(|(_, g)| g);
        match self.scope {
            CandidateScope::All => others.collect(),
            CandidateScope::TopRanks { last_rank } => others.take(last_rank.saturating_sub(1)).collect(),
        }
    }

    fn recurring(&self, g: &FaceGroup) -> bool {
        week_windows(g.timestamps()).len() >= self.min_windows
    }

    pub fn has_partner(&self, user: &FaceGroup, others: &[&FaceGroup]) -> Result<bool, InferenceError> {
        let user_age = group_demographics(user)?.age;
        for g in others {
            let age = group_demographics(g)?.age;
            if self.recurring(g) && (age - user_age).abs() < self.partner_max_age_gap {
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn has_child(&self, user: &FaceGroup, others: &[&FaceGroup]) -> Result<bool, InferenceError> {
        let user_age = group_demographics(user)?.age;
        if user_age <= self.adult_age {
            return Ok(false);
        }
        for g in others {
            let age = group_demographics(g)?.age;
            if self.recurring(g) && user_age - age > self.child_min_age_gap {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Partner rule with default thresholds over the given candidate groups.
pub fn infer_partner(user_group: &FaceGroup, others: &[&FaceGroup]) -> Result<bool, InferenceError> {
    RelationshipRule::default().has_partner(user_group, others)
}

/// Child rule with default thresholds over the given candidate groups.
pub fn infer_child(user_group: &FaceGroup, others: &[&FaceGroup]) -> Result<bool, InferenceError> {
    RelationshipRule::default().has_child(user_group, others)
}

/// Everything inferred about one eligible user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub demographics: Demographics,
    pub ownership: OwnershipLabel,
    pub has_partner: bool,
    pub has_child: bool,
    /// Mean smile confidence of the user's faces, in `[0, 100]`.
    pub visual_happiness: f64,
    /// Mean caption compound score, in `[-1, 1]`.
    pub textual_happiness: f64,
    pub face_count: usize,
    pub post_count: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_timestamp;
    use crate::faceclient::{BBox, FaceObservation};

    fn obs(day: &str, age: f64, gender: Gender) -> FaceObservation {
        FaceObservation {
            face_id: format!("f{day}"),
            post_id: format!("p{day}"),
            timestamp: parse_timestamp(&format!("{day}T12:00:00Z")).unwrap(),
            bbox: BBox { x: 0, y: 0, w: 40, h: 40 },
            age,
            gender,
            race: Race::Caucasian,
            smiling: 50.0,
            token: String::new(),
        }
    }

    fn group(days: &[&str], age: f64) -> FaceGroup {
        FaceGroup {
            group_id: "g".into(),
            members: days.iter().map(|d| obs(d, age, Gender::Female)).collect(),
            representative: String::new(),
        }
    }

    #[test]
    fn demographics_examples() {
        assert_eq!(group_demographics(&group(&["2017-01-02"], 39.0)).unwrap().age, 39.0);
        let mut g = group(&["2017-01-02", "2017-01-03", "2017-01-04"], 0.0);
        for (m, a) in g.members.iter_mut().zip([30.0, 10.0, 20.0]) {
            m.age = a;
        }
        assert_eq!(group_demographics(&g).unwrap().age, 20.0);
        g.members[0].gender = Gender::Male;
        g.members[1].gender = Gender::Male;
        assert_eq!(group_demographics(&g).unwrap().gender, Gender::Male);
        assert_eq!(group_demographics(&group(&[], 1.0)), Err(InferenceError::EmptyGroup));
    }

    #[test]
    fn plurality_tie_goes_to_earliest() {
        let mut g = group(&["2017-01-02", "2017-01-03"], 30.0);
        g.members[0].gender = Gender::Male;
        assert_eq!(group_demographics(&g).unwrap().gender, Gender::Male);
        g.members[0].gender = Gender::Female;
        g.members[1].gender = Gender::Male;
        assert_eq!(group_demographics(&g).unwrap().gender, Gender::Female);
    }

    #[test]
    fn median_even() {
        assert_eq!(median(&[1.0, 4.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn identify_user_examples() {
        let days: Vec<String> = (1..=9).map(|d| format!("2017-01-{d:02}")).collect();
        let d: Vec<&str> = days.iter().map(String::as_str).collect();
        let groups = vec![group(&d[..7], 30.0), group(&d[..3], 20.0), group(&d[..1], 10.0)];
        assert_eq!(identify_user(&groups).unwrap().len(), 7);
        assert_eq!(identify_user(&groups[1..2]).unwrap().len(), 3);

        let late = group(&["2017-01-03", "2017-01-04", "2017-01-05", "2017-01-06"], 1.0);
        let early = group(&["2017-01-01", "2017-01-07", "2017-01-08", "2017-01-09"], 2.0);
        let groups = vec![late, early];
        assert_eq!(identify_user(&groups).unwrap().members[0].age, 2.0);

        assert_eq!(identify_user(&[]), Err(InferenceError::NoGroups));
        assert_eq!(identify_user(&[group(&[], 1.0)]), Err(InferenceError::NoGroups));
    }

    #[test]
    fn partner_examples() {
        let user = group(&["2017-01-02"], 30.0);
        // ISO weeks 2 and 5 of 2017
        let other = group(&["2017-01-10", "2017-02-01"], 28.0);
        assert!(infer_partner(&user, &[&other]).unwrap());
        let one_week = group(&["2017-01-10", "2017-01-11"], 29.0);
        assert!(!infer_partner(&user, &[&one_week]).unwrap());
        let gap5 = group(&["2017-01-10", "2017-02-01", "2017-03-01"], 35.0);
        assert!(!infer_partner(&user, &[&gap5]).unwrap());
    }

    #[test]
    fn child_examples() {
        let user40 = group(&["2017-01-02"], 40.0);
        let kid = group(&["2017-01-10", "2017-02-01"], 5.0);
        assert!(infer_child(&user40, &[&kid]).unwrap());
        let user17 = group(&["2017-01-02"], 17.0);
        let baby = group(&["2017-01-10", "2017-02-01", "2017-03-01"], 1.0);
        assert!(!infer_child(&user17, &[&baby]).unwrap());
        let adult22 = group(&["2017-01-10", "2017-02-01"], 22.0);
        assert!(!infer_child(&user40, &[&adult22]).unwrap());
        // a parent is older, not a child
        let parent = group(&["2017-01-10", "2017-02-01"], 65.0);
        assert!(!infer_child(&user40, &[&parent]).unwrap());
    }

    #[test]
    fn candidate_scope() {
        let groups: Vec<FaceGroup> = (0..5).map(|i| group(&["2017-01-02"], i as f64)).collect();
        let rule = RelationshipRule::default();
        let c = rule.candidates(&groups, 0);
        assert_eq!(c.iter().map(|g| g.members[0].age).collect::<Vec<_>>(), [1.0, 2.0]);
        let all = RelationshipRule { scope: CandidateScope::All, ..rule };
        assert_eq!(all.candidates(&groups, 0).len(), 4);
    }
}
