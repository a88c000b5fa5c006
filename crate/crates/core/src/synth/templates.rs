//! Caption and hashtag pools for generated posts.

use serde::{Deserialize, Serialize};

use crate::sentiment::Analyzer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tone {
    Positive,
    Neutral,
    Negative,
}

pub const POSITIVE: &[&str] = &[
    "so happy today :)",
    "best day ever!!",
    "love this view",
    "great morning walk :D",
    "feeling blessed and grateful",
    "lol this is awesome",
    "friggin amazing weekend",
    "good times with good people",
    "sunshine makes me smile",
    "this made my day haha",
    "what a lovely evening",
    "so proud of this one <3",
    "fun fun fun",
    "the best coffee in town!",
    "happier than ever",
];

pub const NEUTRAL: &[&str] = &[
    "",
    "monday",
    "at the park",
    "coffee time",
    "new photo",
    "weekend plans",
    "throwback",
    "on the way home",
    "dinner",
    "saturday morning",
    "city lights",
    "back at it",
];

pub const NEGATIVE: &[&str] = &[
    "ugh monday sux",
    "so tired today :(",
    "worst traffic ever",
    "feeling sad",
    "missing summer so bad",
    "not a good day",
    "rain again... hate it",
    "this week was awful",
    "bored and lonely",
    "why is everything broken",
];

pub const HASHTAGS: &[&str] = &["tbt", "love", "instagood", "photooftheday", "weekend", "friends", "foodie", "travel"];

/// Caption pools with each template's compound score precomputed.
#[derive(Debug, Clone)]
pub struct CaptionBank {
    pools: [Vec<(&'static str, f64)>; 3],
}

impl CaptionBank {
    pub fn new(analyzer: &Analyzer) -> Self {
        let score = |pool: &[&'static str]| pool.iter().map(|t| (*t, analyzer.compound(t))).collect::<Vec<_>>();
        Self { pools: [score(POSITIVE), score(NEUTRAL), score(NEGATIVE)] }
    }

    pub fn pool(&self, tone: Tone) -> &[(&'static str, f64)] {
        &self.pools[match tone {
            Tone::Positive => 0,
            Tone::Neutral => 1,
            Tone::Negative => 2,
        }]
    }

    /// Mean compound of a pool under uniform template choice.
    pub fn pool_mean(&self, tone: Tone) -> f64 {
        let pool = self.pool(tone);
        pool.iter().map(|(_, s)| s).sum::<f64>() / pool.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pools_score_with_their_tone() {
        let bank = CaptionBank::new(&Analyzer::default());
        for (t, s) in bank.pool(Tone::Positive) {
            assert!(*s > 0.0, "{t:?} scored {s}");
        }
        for (t, s) in bank.pool(Tone::Neutral) {
            assert_eq!(*s, 0.0, "{t:?}");
        }
        for (t, s) in bank.pool(Tone::Negative) {
            assert!(*s < 0.0, "{t:?} scored {s}");
        }
    }
}
