//! Tukey–Kramer simultaneous pairwise comparison of group means.

use serde::{Deserialize, Serialize};

use super::range::{studentized_range_cdf, studentized_range_quantile};
use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSample {
    pub label: String,
    pub values: Vec<f64>,
}

impl GroupSample {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self { label: label.into(), values }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    fn sum_sq_dev(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub pair: (String, String),
    pub lower: f64,
    pub est_mean_diff: f64,
    pub upper: f64,
    pub p_value: f64,
    /// Set when the pooled variance is zero and the p-value is a limit.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

impl ComparisonResult {
    /// `"a-b"`, the row label used in comparison tables.
    pub fn categories(&self) -> String {
        format!("{}-{}", self.pair.0, self.pair.1)
    }

    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }

    pub fn excludes_zero(&self) -> bool {
        self.lower > 0.0 || self.upper < 0.0
    }
}

/// Table rendering of a p-value: below `1e-4` prints as `0`.
pub fn format_p(p: f64) -> String {
    if p < 1e-4 {
        "0".to_string()
    } else {
        format!("{p:.4}")
    }
}

/// Pooled within-group variance and its degrees of freedom.
pub fn pooled_variance(groups: &[GroupSample]) -> (f64, f64) {
    let mut ss: Vec<f64> = groups.iter().map(GroupSample::sum_sq_dev).collect();
    // fixed summation order keeps the result independent of group order
    ss.sort_by(f64::total_cmp);
    let n: usize = groups.iter().map(|g| g.values.len()).sum();
    let df = (n - groups.len()) as f64;
    (ss.iter().sum::<f64>() / df, df)
}

/// All unordered pairs `(i, j)`, `i < j`, in input order.
pub fn tukey_kramer(groups: &[GroupSample], alpha: f64) -> Result<Vec<ComparisonResult>, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups(groups.len()));
    }
    for g in groups {
        if g.values.len() < 2 {
            return Err(StatsError::GroupTooSmall { label: g.label.clone(), n: g.values.len() });
        }
        if g.values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(g.label.clone()));
        }
    }
    let k = groups.len() as u32;
    let (mse, df) = pooled_variance(groups);
    let q_crit = studentized_range_quantile(alpha, k, df)?;
    let means: Vec<f64> = groups.iter().map(GroupSample::mean).collect();

    let mut out = Vec::with_capacity(groups.len() * (groups.len() - 1) / 2);
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let (ni, nj) = (groups[i].values.len() as f64, groups[j].values.len() as f64);
            let est = means[i] - means[j];
            let se = (mse / 2.0 * (1.0 / ni + 1.0 / nj)).sqrt();
            let half = q_crit * se;
            let (p_value, degenerate) = if se > 0.0 {
                (1.0 - studentized_range_cdf(est.abs() / se, k, df)?, false)
            } else if est == 0.0 {
                (1.0, true)
            } else {
                (0.0, true)
            };
            out.push(ComparisonResult {
                pair: (groups[i].label.clone(), groups[j].label.clone()),
                lower: est - half,
                est_mean_diff: est,
                upper: est + half,
                p_value: p_value.clamp(0.0, 1.0),
                degenerate,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_groups() {
        let g = vec![GroupSample::new("a", vec![1.0, 2.0, 3.0]), GroupSample::new("b", vec![1.0, 2.0, 3.0])];
        let r = &tukey_kramer(&g, 0.05).unwrap()[0];
        assert_eq!(r.est_mean_diff, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-9);
        assert_eq!(r.lower, -r.upper);
        assert_eq!(r.categories(), "a-b");
    }

    #[test]
    fn zero_variance_cases() {
        let g = vec![GroupSample::new("a", vec![2.0, 2.0]), GroupSample::new("b", vec![5.0, 5.0])];
        let r = &tukey_kramer(&g, 0.05).unwrap()[0];
        assert_eq!((r.p_value, r.degenerate), (0.0, true));
        let g = vec![GroupSample::new("a", vec![2.0, 2.0]), GroupSample::new("b", vec![2.0, 2.0])];
        let r = &tukey_kramer(&g, 0.05).unwrap()[0];
        assert_eq!((r.p_value, r.degenerate), (1.0, true));
    }

    #[test]
    fn three_groups_give_three_rows_in_order() {
        let g = vec![
            GroupSample::new("dog", vec![60.0, 62.0, 58.0, 61.0]),
            GroupSample::new("cat", vec![55.0, 57.0, 54.0]),
            GroupSample::new("none", vec![49.0, 50.0, 48.0, 47.0, 51.0]),
        ];
        let rows = tukey_kramer(&g, 0.05).unwrap();
        let labels: Vec<String> = rows.iter().map(ComparisonResult::categories).collect();
        assert_eq!(labels, ["dog-cat", "dog-none", "cat-none"]);
        for r in &rows {
            assert!(r.lower <= r.est_mean_diff && r.est_mean_diff <= r.upper);
            assert!(((r.upper - r.est_mean_diff) - (r.est_mean_diff - r.lower)).abs() < 1e-9);
        }
        assert!(rows[1].significant(0.05) && rows[1].excludes_zero());
    }

    #[test]
    fn input_validation() {
        assert!(matches!(tukey_kramer(&[GroupSample::new("a", vec![1.0, 2.0])], 0.05), Err(StatsError::TooFewGroups(1))));
        let g = vec![GroupSample::new("a", vec![1.0]), GroupSample::new("b", vec![1.0, 2.0])];
        assert!(matches!(tukey_kramer(&g, 0.05), Err(StatsError::GroupTooSmall { n: 1, .. })));
        let g = vec![GroupSample::new("a", vec![1.0, f64::NAN]), GroupSample::new("b", vec![1.0, 2.0])];
        assert!(matches!(tukey_kramer(&g, 0.05), Err(StatsError::NonFinite(_))));
    }

    #[test]
    fn p_formatting() {
        assert_eq!(format_p(3e-5), "0");
        assert_eq!(format_p(0.0016), "0.0016");
        assert_eq!(format_p(1.0), "1.0000");
    }
}
