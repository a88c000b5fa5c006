//! Shared caption generators for the sentiment property suites.

use std::sync::OnceLock;

use petjoy_core::sentiment::{Analyzer, BOOSTERS, DAMPENERS, NEGATIONS};
use proptest::prelude::*;

pub fn analyzer() -> &'static Analyzer {
    static A: OnceLock<Analyzer> = OnceLock::new();
    A.get_or_init(Analyzer::default)
}

/// Lowercase alphabetic lexicon words with the given sign, sorted.
fn lexicon_words(positive: bool) -> Vec<String> {
    let mut words: Vec<String> = analyzer()
        .lexicon()
        .iter()
        .filter(|(w, v)| {
            w.chars().all(|c| c.is_ascii_lowercase())
                && w.len() > 2
                && (*v > 0.0) == positive
                && *v != 0.0
                && !BOOSTERS.contains(w)
                && !DAMPENERS.contains(w)
                && !NEGATIONS.contains(w)
                && !["no", "kind", "least", "but"].contains(w)
        })
        .map(|(w, _)| w.to_string())
        .collect();
    words.sort();
    words
}

pub fn positive_words() -> &'static [String] {
    static W: OnceLock<Vec<String>> = OnceLock::new();
    W.get_or_init(|| lexicon_words(true))
}

pub fn negative_words() -> &'static [String] {
    static W: OnceLock<Vec<String>> = OnceLock::new();
    W.get_or_init(|| lexicon_words(false))
}

pub const SPACERS: &[&str] = &["table", "window", "chair", "street", "monday", "photo", "garden", "coffee"];

pub fn caption_word() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => prop::sample::select(SPACERS).prop_map(str::to_string),
        2 => (0..positive_words().len()).prop_map(|i| positive_words()[i].clone()),
        2 => (0..negative_words().len()).prop_map(|i| negative_words()[i].clone()),
        1 => prop::sample::select(NEGATIONS).prop_map(str::to_string),
        1 => prop::sample::select(&["very", "so", "kinda", "but", "no", "least", "really"][..]).prop_map(str::to_string),
    ]
}

pub fn caption() -> impl Strategy<Value = String> {
    (prop::collection::vec(caption_word(), 0..12), 0usize..3, 0usize..4).prop_map(|(words, bangs, qs)| {
        format!("{}{}{}", words.join(" "), "!".repeat(bangs), "?".repeat(qs))
    })
}

pub fn bounded_check(text: &str) -> Result<(), TestCaseError> {
    let s = analyzer().score(text);
    prop_assert!((-1.0..=1.0).contains(&s.compound));
    for p in [s.positive, s.negative, s.neutral] {
        prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
    }
    Ok(())
}

/// A caption, some neutral spacer words and a positive lexicon word.
pub fn monotone_case() -> impl Strategy<Value = (String, Vec<&'static str>, usize)> {
    (caption(), prop::collection::vec(prop::sample::select(SPACERS), 3..5), 0..positive_words().len())
}

pub fn monotone_check((base, spacers, idx): (String, Vec<&'static str>, usize)) -> Result<(), TestCaseError> {
    let before = analyzer().compound(&base);
    let extended = format!("{base} {} {}", spacers.join(" "), positive_words()[idx]);
    let after = analyzer().compound(&extended);
    prop_assert!(after >= before, "{base:?} {before} -> {extended:?} {after}");
    Ok(())
}

pub fn negation_case() -> impl Strategy<Value = (Vec<&'static str>, usize, &'static str)> {
    (
        prop::collection::vec(prop::sample::select(SPACERS), 0..4),
        0..positive_words().len(),
        prop::sample::select(&["not", "never", "isn't", "don't", "without"][..]),
    )
}

pub fn negation_check((prefix, idx, neg): (Vec<&'static str>, usize, &'static str)) -> Result<(), TestCaseError> {
    let word = &positive_words()[idx];
    let plain = format!("{} {word}", prefix.join(" "));
    let negated = format!("{} {neg} {word}", prefix.join(" "));
    prop_assert!(analyzer().compound(&plain) > 0.0);
    prop_assert!(analyzer().compound(&negated) < 0.0, "{negated:?}");
    Ok(())
}
