use serde::{Deserialize, Serialize};

/// Numeric constants of the scoring rules. Loadable from a `key = value`
/// file; missing keys keep their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleConstants {
    /// Normalization constant in `s / sqrt(s^2 + alpha)`.
    pub alpha: f64,
    pub booster_increment: f64,
    pub dampener_decrement: f64,
    pub caps_increment: f64,
    pub negation_scalar: f64,
    /// Booster weight when it sits two tokens before the sentiment word.
    pub booster_decay_second: f64,
    /// Booster weight when it sits three tokens before the sentiment word.
    pub booster_decay_third: f64,
    /// Scale for "never so/this <word>" constructions.
    pub never_so_scalar: f64,
    pub exclamation_increment: f64,
    pub exclamation_cap: u32,
    pub question_increment: f64,
    /// Question-mark runs longer than `question_cap` add this flat amount.
    pub question_cap: u32,
    pub question_max_amplifier: f64,
    pub but_before: f64,
    pub but_after: f64,
}

impl Default for RuleConstants {
    fn default() -> Self {
        Self {
            alpha: 15.0,
            booster_increment: 0.293,
            dampener_decrement: -0.293,
            caps_increment: 0.733,
            negation_scalar: -0.74,
            booster_decay_second: 0.95,
            booster_decay_third: 0.9,
            never_so_scalar: 1.25,
            exclamation_increment: 0.292,
            exclamation_cap: 4,
            question_increment: 0.18,
            question_cap: 3,
            question_max_amplifier: 0.96,
            but_before: 0.5,
            but_after: 1.5,
        }
    }
}

impl RuleConstants {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

pub const NEGATIONS: &[&str] = &[
    "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt", "ain't", "aren't", "can't",
    "couldn't", "daren't", "didn't", "doesn't", "dont", "hadnt", "hasnt", "havent", "isnt", "mightnt", "mustnt",
    "neither", "don't", "hadn't", "hasn't", "haven't", "isn't", "mightn't", "mustn't", "neednt", "needn't", "never",
    "none", "nope", "nor", "not", "nothing", "nowhere", "oughtnt", "shant", "shouldnt", "uhuh", "wasnt", "werent",
    "oughtn't", "shan't", "shouldn't", "uh-uh", "wasn't", "weren't", "without", "wont", "wouldnt", "won't",
    "wouldn't", "rarely", "seldom", "despite",
];

/// Degree adverbs that raise intensity.
pub const BOOSTERS: &[&str] = &[
    "absolutely", "amazingly", "awfully", "completely", "considerable", "considerably", "decidedly", "deeply",
    "effing", "enormous", "enormously", "entirely", "especially", "exceptional", "exceptionally", "extreme",
    "extremely", "fabulously", "flipping", "flippin", "frackin", "fracking", "fricking", "frickin", "frigging",
    "friggin", "fully", "fuckin", "fucking", "fuggin", "fugging", "greatly", "hella", "highly", "hugely",
    "incredible", "incredibly", "intensely", "major", "majorly", "more", "most", "particularly", "purely", "quite",
    "really", "remarkably", "so", "substantially", "thoroughly", "total", "totally", "tremendous", "tremendously",
    "uber", "unbelievably", "unusually", "utter", "utterly", "very",
];

/// Degree adverbs that lower intensity. Multi-word entries only match as
/// n-grams.
pub const DAMPENERS: &[&str] = &[
    "almost", "barely", "hardly", "just enough", "kind of", "kinda", "kindof", "kind-of", "less", "little",
    "marginal", "marginally", "occasional", "occasionally", "partly", "scarce", "scarcely", "slight", "slightly",
    "somewhat", "sort of", "sorta", "sortof", "sort-of",
];

/// Phrases whose valence replaces that of the lexicon word they contain.
pub const SPECIAL_CASES: &[(&str, f64)] = &[
    ("the shit", 3.0),
    ("the bomb", 3.0),
    ("bad ass", 1.5),
    ("badass", 1.5),
    ("bus stop", 0.0),
    ("yeah right", -2.0),
    ("kiss of death", -1.5),
    ("to die for", 3.0),
    ("beating heart", 3.5),
];
