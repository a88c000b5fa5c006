//! Lexicon-and-rules caption sentiment producing a compound score in
//! `[-1, 1]`.
//!
//! The rule set covers negation within three preceding tokens, degree
//! boosters and dampeners, ALL-CAPS emphasis, exclamation and question-mark
//! emphasis, contrastive "but", "least" constructions and a handful of
//! phrase overrides. All numeric constants live in [`RuleConstants`].

mod rules;

pub use rules::{RuleConstants, BOOSTERS, DAMPENERS, NEGATIONS, SPECIAL_CASES};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};


const DEFAULT_LEXICON: &str = include_str!("../../data/lexicon.tsv");
const DEFAULT_EMOJI: &str = include_str!("../../data/emoji.tsv");

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("line {line}: expected `token<TAB>valence`")]
    Format { line: usize },
    #[error("line {line}: invalid valence {value:?}")]
    Valence { line: usize, value: String },
    #[error("line {line}: duplicate token {token:?}")]
    Duplicate { line: usize, token: String },
    #[error("invalid rule constants: {0}")]
    Rules(#[from] toml::de::Error),
}

/// Token → valence map. Tokens are unique and matched against lowercased
/// caption tokens, so entries with uppercase letters never fire.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    entries: HashMap<String, f64>,
}

impl Lexicon {
    /// Parses `token<TAB>valence` lines; extra tab-separated columns are
    /// ignored.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut entries = HashMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let mut cols = raw.split('\t');
            let token = cols.next().map(str::trim).filter(|t| !t.is_empty()).ok_or(LexiconError::Format { line })?;
            let value = cols.next().ok_or(LexiconError::Format { line })?.trim();
            let valence: f64 = value
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| LexiconError::Valence { line, value: value.to_string() })?;
            let token = token.to_string();
            if entries.insert(token.clone(), valence).is_some() {
                return Err(LexiconError::Duplicate { line, token });
            }
        }
        Ok(Self { entries })
    }

    /// The bundled social-media lexicon.
    pub fn default_english() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("bundled lexicon is well-formed")
    }

    pub fn get(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Single-codepoint emoji → textual description.
#[derive(Debug, Clone, Default)]
pub struct EmojiTable(HashMap<char, String>);

impl EmojiTable {
    pub fn parse(text: &str) -> Self {
        let map = text
            .lines()
            .filter_map(|l| {
                let (emoji, desc) = l.split_once('\t')?;
                let mut chars = emoji.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Some((c, desc.trim().to_string())),
                    _ => None,
                }
            })
            .collect();
        Self(map)
    }

    pub fn default_table() -> Self {
        Self::parse(DEFAULT_EMOJI)
    }

    /// Replaces every known emoji by its description, padding with a space
    /// when the previous character was not one.
    pub fn describe(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        let mut prev_space = true;
        for ch in text.chars() {
            if let Some(desc) = self.0.get(&ch) {
                if !prev_space {
                    out.push(' ');
                }
                out.push_str(desc);
                prev_space = false;
            } else {
                out.push(ch);
                prev_space = ch == ' ';
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore {
    pub compound: f64,
    pub positive: f64,
    pub negative: f64,
    pub neutral: f64,
}

impl SentimentScore {
    pub const NEUTRAL: SentimentScore = SentimentScore { compound: 0.0, positive: 0.0, negative: 0.0, neutral: 1.0 };
}

/// Whitespace tokenization that strips surrounding ASCII punctuation from a
/// token unless that would leave two characters or fewer, so emoticons such
/// as `:)` and `:D` survive intact. Case is preserved.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|tok| {
            let stripped = tok.trim_matches(|c: char| c.is_ascii_punctuation());
            if stripped.chars().count() <= 2 {
                tok.to_string()
            } else {
                stripped.to_string()
            }
        })
        .collect()
}

/// At least one cased character and no lowercase ones.
fn is_all_caps(word: &str) -> bool {
    let mut cased = false;
    for c in word.chars() {
        if c.is_lowercase() {
            return false;
        }
        cased |= c.is_uppercase();
    }
    cased
}

/// True when some, but not all, tokens are ALL CAPS.
fn caps_differential(words: &[String]) -> bool {
    let caps = words.iter().filter(|w| is_all_caps(w)).count();
    caps > 0 && caps < words.len()
}

fn is_negation(word: &str) -> bool {
    NEGATIONS.contains(&word) || word.contains("n't")
}

fn special_case(phrase: &str) -> Option<f64> {
    SPECIAL_CASES.iter().find(|(p, _)| *p == phrase).map(|(_, v)| *v)
}

/// Immutable caption scorer.
#[derive(Debug, Clone)]
pub struct Analyzer {
    lexicon: Lexicon,
    emoji: EmojiTable,
    rules: RuleConstants,
}

impl Default for Analyzer {
    fn default() -> Self {
        Self::new(Lexicon::default_english(), EmojiTable::default_table(), RuleConstants::default())
    }
}

impl Analyzer {
    pub fn new(lexicon: Lexicon, emoji: EmojiTable, rules: RuleConstants) -> Self {
        Self { lexicon, emoji, rules }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn rules(&self) -> &RuleConstants {
        &self.rules
    }

    /// Signed degree-modifier weight for a single token.
    fn modifier(&self, lower: &str) -> Option<f64> {
        if BOOSTERS.contains(&lower) {
            Some(self.rules.booster_increment)
        } else if DAMPENERS.contains(&lower) {
            Some(self.rules.dampener_decrement)
        } else {
            None
        }
    }

    /// `s / sqrt(s^2 + alpha)`, clamped to `[-1, 1]`.
    pub fn normalize(&self, sum: f64) -> f64 {
        (sum / (sum * sum + self.rules.alpha).sqrt()).clamp(-1.0, 1.0)
    }

    /// Tokens as seen by the scorer (emoji replaced by descriptions).
    pub fn tokens(&self, text: &str) -> Vec<String> {
        tokenize(self.emoji.describe(text).trim())
    }

    pub fn score(&self, text: &str) -> SentimentScore {
        let described = self.emoji.describe(text);
        let text = described.trim();
        let words = tokenize(text);
        let lower: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
        let cap_diff = caps_differential(&words);

        let mut sentiments = Vec::with_capacity(words.len());
        for i in 0..words.len() {
            if self.modifier(&lower[i]).is_some()
                || (i + 1 < words.len() && lower[i] == "kind" && lower[i + 1] == "of")
            {
                sentiments.push(0.0);
                continue;
            }
            sentiments.push(self.token_valence(i, &words, &lower, cap_diff));
        }
        self.apply_but(&lower, &mut sentiments);
        self.aggregate(&sentiments, text)
    }

    pub fn compound(&self, text: &str) -> f64 {
        self.score(text).compound
    }

    fn token_valence(&self, i: usize, words: &[String], lower: &[String], cap_diff: bool) -> f64 {
        let r = &self.rules;
        let Some(base) = self.lexicon.get(&lower[i]) else {
            return 0.0;
        };
        let mut v = base;

        // "no" directly modifying a lexicon word negates it instead of scoring
        if lower[i] == "no" && i + 1 < words.len() && self.lexicon.contains(&lower[i + 1]) {
            v = 0.0;
        }
        if (i > 0 && lower[i - 1] == "no")
            || (i > 1 && lower[i - 2] == "no")
            || (i > 2 && lower[i - 3] == "no" && (lower[i - 1] == "or" || lower[i - 1] == "nor"))
        {
            v = base * r.negation_scalar;
        }

        if is_all_caps(&words[i]) && cap_diff {
            v += if v > 0.0 { r.caps_increment } else { -r.caps_increment };
        }

        for dist in 0..3 {
            if i > dist && !self.lexicon.contains(&lower[i - dist - 1]) {
                let mut s = self.booster_shift(&words[i - dist - 1], &lower[i - dist - 1], v, cap_diff);
                if s != 0.0 {
                    if dist == 1 {
                        s *= r.booster_decay_second;
                    } else if dist == 2 {
                        s *= r.booster_decay_third;
                    }
                }
                v += s;
                v = self.negation(v, lower, dist, i);
                if dist == 2 {
                    v = self.phrases(v, lower, i);
                }
            }
        }
        self.least(v, lower, i)
    }

    fn booster_shift(&self, word: &str, lower: &str, valence: f64, cap_diff: bool) -> f64 {
        let Some(mut s) = self.modifier(lower) else {
            return 0.0;
        };
        if valence < 0.0 {
            s = -s;
        }
        if is_all_caps(word) && cap_diff {
            s += if valence > 0.0 { self.rules.caps_increment } else { -self.rules.caps_increment };
        }
        s
    }

    fn negation(&self, v: f64, lower: &[String], dist: usize, i: usize) -> f64 {
        let n = self.rules.negation_scalar;
        let so_this = |w: &str| w == "so" || w == "this";
        match dist {
            0 if is_negation(&lower[i - 1]) => v * n,
            1 => {
                if lower[i - 2] == "never" && so_this(&lower[i - 1]) {
                    v * self.rules.never_so_scalar
                } else if lower[i - 2] == "without" && lower[i - 1] == "doubt" {
                    v
                } else if is_negation(&lower[i - 2]) {
                    v * n
                } else {
                    v
                }
            }
            2 => {
                if (lower[i - 3] == "never" && so_this(&lower[i - 2])) || so_this(&lower[i - 1]) {
                    v * self.rules.never_so_scalar
                } else if lower[i - 3] == "without" && (lower[i - 2] == "doubt" || lower[i - 1] == "doubt") {
                    v
                } else if is_negation(&lower[i - 3]) {
                    v * n
                } else {
                    v
                }
            }
            _ => v,
        }
    }

    /// Phrase overrides and multi-word dampeners around position `i >= 3`.
    fn phrases(&self, mut v: f64, lower: &[String], i: usize) -> f64 {
        let (w3, w2, w1, w0) = (&lower[i - 3], &lower[i - 2], &lower[i - 1], &lower[i]);
        let one_zero = format!("{w1} {w0}");
        let two_one_zero = format!("{w2} {w1} {w0}");
        let two_one = format!("{w2} {w1}");
        let three_two_one = format!("{w3} {w2} {w1}");
        let three_two = format!("{w3} {w2}");

        for seq in [&one_zero, &two_one_zero, &two_one, &three_two_one, &three_two] {
            if let Some(val) = special_case(seq) {
                v = val;
                break;
            }
        }
        if lower.len() > i + 1 {
            if let Some(val) = special_case(&format!("{w0} {}", lower[i + 1])) {
                v = val;
            }
        }
        if lower.len() > i + 2 {
            if let Some(val) = special_case(&format!("{w0} {} {}", lower[i + 1], lower[i + 2])) {
                v = val;
            }
        }
        for gram in [&three_two_one, &three_two, &two_one] {
            if let Some(m) = self.modifier(gram) {
                v += m;
            }
        }
        v
    }

    fn least(&self, v: f64, lower: &[String], i: usize) -> f64 {
        let least_before = |k: usize| lower[k] == "least" && !self.lexicon.contains(&lower[k]);
        if i > 1 && least_before(i - 1) {
            if lower[i - 2] != "at" && lower[i - 2] != "very" {
                return v * self.rules.negation_scalar;
            }
            v
        } else if i > 0 && least_before(i - 1) {
            v * self.rules.negation_scalar
        } else {
            v
        }
    }

    /// Halves sentiment before the first "but" and boosts it after.
    fn apply_but(&self, lower: &[String], sentiments: &mut [f64]) {
        if let Some(bi) = lower.iter().position(|w| w == "but") {
            for (si, s) in sentiments.iter_mut().enumerate() {
                if si < bi {
                    *s *= self.rules.but_before;
                } else if si > bi {
                    *s *= self.rules.but_after;
                }
            }
        }
    }

    fn punctuation_emphasis(&self, text: &str) -> f64 {
        let r = &self.rules;
        let bangs = text.matches('!').count().min(r.exclamation_cap as usize);
        let questions = text.matches('?').count();
        let q = if questions > 1 {
            if questions <= r.question_cap as usize {
                questions as f64 * r.question_increment
            } else {
                r.question_max_amplifier
            }
        } else {
            0.0
        };
        bangs as f64 * r.exclamation_increment + q
    }

    fn aggregate(&self, sentiments: &[f64], text: &str) -> SentimentScore {
        if sentiments.is_empty() {
            return SentimentScore::NEUTRAL;
        }
        let mut sum: f64 = sentiments.iter().sum();
        let emphasis = self.punctuation_emphasis(text);
        if sum > 0.0 {
            sum += emphasis;
        } else if sum < 0.0 {
            sum -= emphasis;
        }
        let compound = self.normalize(sum);

        let (mut pos, mut neg, mut neu) = (0.0, 0.0, 0usize);
        for &s in sentiments {
            if s > 0.0 {
                pos += s + 1.0;
            } else if s < 0.0 {
                neg += s - 1.0;
            } else {
                neu += 1;
            }
        }
        if pos > neg.abs() {
            pos += emphasis;
        } else if pos < neg.abs() {
            neg -= emphasis;
        }
        let total = pos + neg.abs() + neu as f64;
        SentimentScore {
            compound,
            positive: (pos / total).abs(),
            negative: (neg / total).abs(),
            neutral: (neu as f64 / total).abs(),
        }
    }
}
