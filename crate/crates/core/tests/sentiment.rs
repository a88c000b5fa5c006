mod common;

use common::sentiment::{analyzer, bounded_check, monotone_case, monotone_check, negation_case, negation_check};
use proptest::prelude::*;

#[test]
fn golden_file_agreement() {
    let rows = common::golden_captions();
    assert_eq!(rows.len(), 200);
    let mut worst = (0.0f64, String::new());
    for (caption, expected) in &rows {
        let got = analyzer().compound(caption);
        assert!((-1.0..=1.0).contains(&got));
        assert_eq!(got.signum(), expected.signum(), "sign mismatch for {caption:?}: {got} vs {expected}");
        let d = (got - expected).abs();
        if d > worst.0 {
            worst = (d, caption.clone());
        }
    }
    assert!(worst.0 <= 0.05, "largest deviation {} for {:?}", worst.0, worst.1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn scores_are_bounded(text in "\\PC{0,80}") {
        bounded_check(&text)?;
    }

    #[test]
    fn appending_positive_word_never_lowers_compound(case in monotone_case()) {
        monotone_check(case)?;
    }

    #[test]
    fn negation_flips_positive_words(case in negation_case()) {
        negation_check(case)?;
    }
}
