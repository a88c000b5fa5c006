#![allow(dead_code)]

pub mod sentiment;

use std::path::PathBuf;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// `(caption, reference compound)` rows of the sentiment golden file.
pub fn golden_captions() -> Vec<(String, f64)> {
    let text = std::fs::read_to_string(data_path("sentiment_golden.tsv")).expect("golden file");
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (caption, score) = l.rsplit_once('\t').expect("caption<TAB>compound");
            (caption.to_string(), score.parse().expect("numeric compound"))
        })
        .collect()
}
