//! Multiple-comparison testing over per-user happiness scores.

mod compare;
pub mod quadrature;
mod range;
mod tukey;

pub use compare::{
    compare_subgroups, group_summaries, partition, ComparisonTable, Factor, GroupSummary, Metric, Stratum,
};
pub use range::{studentized_range_cdf, studentized_range_quantile, DF_INFINITE};
pub use tukey::{format_p, pooled_variance, tukey_kramer, ComparisonResult, GroupSample};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error(
        "quantile search did not converge (alpha={alpha}, k={k}, df={df}): bracket [{lo}, {hi}], residual {residual}"
    )]
    NonConvergence { alpha: f64, k: u32, df: f64, lo: f64, hi: f64, residual: f64 },
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("group {label:?} has {n} value(s); at least 2 required")]
    GroupTooSmall { label: String, n: usize },
    #[error("group {0:?} contains a non-finite value")]
    NonFinite(String),
}
