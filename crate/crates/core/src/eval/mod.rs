//! Evaluation protocol: repeated leave-one-participant-per-group-out runs,
//! per-run confusion metrics, distribution summaries and feature-frequency
//! ranking across runs.

mod harness;
mod metrics;
mod report;

pub use harness::{
    reduced_model_workflow, run_repeated_cv, split_leave_one_per_group, CvConfig, FeatureSelection,
    RunResult, WorkflowReport,
};
pub use metrics::{compute_metrics, ConfusionMatrix, MetricSet};
pub use report::{
    rank_feature_frequency, summarize_distribution, AggregateReport, DistributionSummary,
    FrequencyEntry, FrequencyTable, MetricSummaries, SubsetSelection, REPORT_FORMAT_VERSION,
};
