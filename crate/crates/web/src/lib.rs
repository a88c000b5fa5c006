//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string; the page parses it.

use std::sync::OnceLock;

use petjoy_core::sentiment::Analyzer;
use petjoy_core::stats::{studentized_range_cdf, studentized_range_quantile, tukey_kramer, GroupSample, DF_INFINITE};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn analyzer() -> &'static Analyzer {
    static ANALYZER: OnceLock<Analyzer> = OnceLock::new();
    ANALYZER.get_or_init(Analyzer::default)
}

#[derive(Serialize)]
struct CaptionReport {
    tokens: Vec<String>,
    compound: f64,
    positive: f64,
    negative: f64,
    neutral: f64,
}

pub fn caption_report(text: &str) -> String {
    let a = analyzer();
    let s = a.score(text);
    let r = CaptionReport {
        tokens: a.tokens(text),
        compound: s.compound,
        positive: s.positive,
        negative: s.negative,
        neutral: s.neutral,
    };
    serde_json::to_string(&r).expect("plain struct")
}

/// Sentiment of one caption.
#[wasm_bindgen]
pub fn score_caption(text: &str) -> String {
    caption_report(text)
}

#[derive(Serialize)]
struct RangePoint {
    cdf: f64,
    quantile: f64,
}

/// `df` of 0 or below means infinite.
pub fn range_point(q: f64, k: u32, df: f64, alpha: f64) -> Result<String, String> {
    let df = if df <= 0.0 { DF_INFINITE * 2.0 } else { df };
    let cdf = studentized_range_cdf(q, k, df).map_err(|e| e.to_string())?;
    let quantile = studentized_range_quantile(alpha, k, df).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&RangePoint { cdf, quantile }).expect("plain struct"))
}

/// Studentized-range CDF at `q` and the upper-`alpha` critical value.
#[wasm_bindgen]
pub fn studentized_range(q: f64, k: u32, df: f64, alpha: f64) -> Result<String, JsError> {
    range_point(q, k, df, alpha).map_err(|e| JsError::new(&e))
}

/// Parses lines of `label: v1, v2, ...`. Blank lines and `#` comments are skipped.
pub fn parse_groups(text: &str) -> Result<Vec<GroupSample>, String> {
    let mut groups = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (label, values) = line.split_once(':').ok_or_else(|| format!("line {}: expected `label: values`", n + 1))?;
        let values = values
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|v| !v.is_empty())
            .map(|v| v.parse::<f64>().map_err(|_| format!("line {}: {v:?} is not a number", n + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        groups.push(GroupSample::new(label.trim(), values));
    }
    Ok(groups)
}

pub fn tukey_table(text: &str, alpha: f64) -> Result<String, String> {
    let groups = parse_groups(text)?;
    let rows = tukey_kramer(&groups, alpha).map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&rows).expect("plain struct"))
}

/// Tukey–Kramer rows for groups typed one per line.
#[wasm_bindgen]
pub fn compare_groups(text: &str, alpha: f64) -> Result<String, JsError> {
    tukey_table(text, alpha).map_err(|e| JsError::new(&e))
}
