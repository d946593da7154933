//! Ranking comparisons and the missing-data and aggregation experiments.

pub mod experiments;
pub mod metrics;
pub mod transform;

pub use experiments::{
    aggregation_consistency, robustness_sweep, AggregationReport, SweepCell, SweepResult, SweepSummary,
    DEFAULT_TOP_N,
};
pub use metrics::{
    average_ranks, compare, kendall, orders_agree, pair_counts, precision_at_n, spearman, ComparisonReport,
    PairCounts,
};
pub use transform::{aggregate_features, perturb_features, sum_by_class, AggregationMap, PerturbationSpec};
