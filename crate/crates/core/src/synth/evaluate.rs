//! Scoring pipeline output against planted ground truth.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{GroundTruth, SynthError, Trap, TruthRecord};
use crate::inference::UserProfile;
use crate::petclass::OwnershipLabel;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl BinaryMetrics {
    pub fn record(&mut self, truth: bool, predicted: bool) {
        match (truth, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    /// 1 when nothing was predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// 1 when there are no positives.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.tp + self.tn + self.fp + self.fn_)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

const OWNERSHIP_ORDER: [OwnershipLabel; 3] = [OwnershipLabel::DogOwner, OwnershipLabel::CatOwner, OwnershipLabel::None];

fn ownership_index(o: OwnershipLabel) -> usize {
    OWNERSHIP_ORDER.iter().position(|x| *x == o).expect("listed")
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OwnershipMetrics {
    /// Rows are truth, columns prediction, both in dog, cat, none order.
    pub confusion: [[u64; 3]; 3],
    /// Owner versus non-owner.
    pub owner: BinaryMetrics,
}

impl OwnershipMetrics {
    pub fn record(&mut self, truth: OwnershipLabel, predicted: OwnershipLabel) {
        self.confusion[ownership_index(truth)][ownership_index(predicted)] += 1;
        self.owner.record(truth.is_owner(), predicted.is_owner());
    }

    pub fn accuracy(&self) -> f64 {
        let total: u64 = self.confusion.iter().flatten().sum();
        ratio((0..3).map(|i| self.confusion[i][i]).sum(), total)
    }

    /// One-vs-rest F1 of a class.
    pub fn class_f1(&self, label: OwnershipLabel) -> f64 {
        let i = ownership_index(label);
        let tp = self.confusion[i][i];
        let predicted: u64 = (0..3).map(|r| self.confusion[r][i]).sum();
        let actual: u64 = self.confusion[i].iter().sum();
        BinaryMetrics { tp, fp: predicted - tp, fn_: actual - tp, tn: 0 }.f1()
    }

    pub fn macro_f1(&self) -> f64 {
        OWNERSHIP_ORDER.iter().map(|&l| self.class_f1(l)).sum::<f64>() / 3.0
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    /// Profiles matched to eligible truth records.
    pub matched: usize,
    /// Eligible truth users without a profile.
    pub missing: usize,
    /// Profiles for users planted as ineligible.
    pub false_eligible: usize,
    pub ownership: OwnershipMetrics,
    pub partner: BinaryMetrics,
    pub child: BinaryMetrics,
    pub age_mae: f64,
    pub gender_accuracy: f64,
    pub race_accuracy: f64,
    /// Against the mean of the smiling values actually generated.
    pub visual_mae: f64,
    pub textual_mae: f64,
    /// Users of each trap case handled correctly, out of those matched.
    pub traps: BTreeMap<Trap, (usize, usize)>,
}

impl EvalReport {
    pub fn ownership_accuracy(&self) -> f64 {
        self.ownership.accuracy()
    }
}

fn trap_handled(trap: Trap, truth: &TruthRecord, p: &UserProfile) -> bool {
    let ownership = p.ownership == truth.ownership;
    let partner = p.has_partner == truth.has_partner;
    let child = p.has_child == truth.has_child;
    match trap {
        Trap::SingleWeekPetPoster | Trap::CrossSpeciesSingleWeek => ownership,
        Trap::PartnerGapFive => partner,
        Trap::ChildGapEighteen => child,
        Trap::OlderParent | Trap::SingleWeekFriend | Trap::TiedCompanions => partner && child,
    }
}

/// Compares profiles with planted truth. A profile whose user has no truth
/// record is an error; eligible users without a profile are counted.
pub fn evaluate_pipeline(profiles: &[UserProfile], truth: &GroundTruth) -> Result<EvalReport, SynthError> {
    let mut report = EvalReport::default();
    let (mut age_err, mut gender_ok, mut race_ok) = (0.0, 0usize, 0usize);
    let (mut vis_err, mut vis_n, mut txt_err) = (0.0, 0usize, 0.0);
    let mut seen = std::collections::HashSet::new();

    for p in profiles {
        let t = truth.get(&p.user_id).ok_or_else(|| SynthError::IdMismatch(p.user_id.clone()))?;
        seen.insert(t.user_id.as_str());
        if !t.eligible {
            report.false_eligible += 1;
            continue;
        }
        report.matched += 1;
        report.ownership.record(t.ownership, p.ownership);
        report.partner.record(t.has_partner, p.has_partner);
        report.child.record(t.has_child, p.has_child);
        age_err += (p.demographics.age - t.demographics.age).abs();
        gender_ok += usize::from(p.demographics.gender == t.demographics.gender);
        race_ok += usize::from(p.demographics.race == t.demographics.race);
        if let Some(v) = t.realized_visual {
            vis_err += (p.visual_happiness - v).abs();
            vis_n += 1;
        }
        txt_err += (p.textual_happiness - t.realized_textual).abs();
        for &trap in &t.traps {
            let e = report.traps.entry(trap).or_insert((0, 0));
            e.0 += usize::from(trap_handled(trap, t, p));
            e.1 += 1;
        }
    }
    report.missing = truth.eligible().filter(|t| !seen.contains(t.user_id.as_str())).count();

    let n = report.matched.max(1) as f64;
    report.age_mae = age_err / n;
    report.gender_accuracy = gender_ok as f64 / n;
    report.race_accuracy = race_ok as f64 / n;
    report.visual_mae = vis_err / vis_n.max(1) as f64;
    report.textual_mae = txt_err / n;
    Ok(report)
}
