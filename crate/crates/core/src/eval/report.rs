use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::harness::{CvConfig, RunResult};
use crate::error::{Error, Result};

/// Bumped whenever the JSON layout of [`AggregateReport`] changes.
pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Five-number summary, mean and Tukey whiskers of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    /// Smallest observation within `q1 - 1.5 IQR`.
    pub whisker_low: f64,
    /// Largest observation within `q3 + 1.5 IQR`.
    pub whisker_high: f64,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quartiles use linear interpolation between order statistics.
///
/// # Panics
/// If `values` is empty.
pub fn summarize_distribution(values: &[f64]) -> DistributionSummary {
    assert!(!values.is_empty(), "empty sample");
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let q1 = quantile(&s, 0.25);
    let q3 = quantile(&s, 0.75);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    DistributionSummary {
        min: s[0],
        q1,
        median: quantile(&s, 0.5),
        q3,
        max: s[s.len() - 1],
        mean: values.iter().sum::<f64>() / values.len() as f64,
        whisker_low: s.iter().copied().find(|&v| v >= lo_fence).unwrap_or(s[0]),
        whisker_high: s.iter().rev().copied().find(|&v| v <= hi_fence).unwrap_or(s[s.len() - 1]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummaries {
    pub accuracy: DistributionSummary,
    pub precision: DistributionSummary,
    pub recall: DistributionSummary,
    pub miss_rate: DistributionSummary,
    pub f1: DistributionSummary,
}

impl MetricSummaries {
    fn from_runs(runs: &[RunResult]) -> Self {
        let pick = |f: fn(&RunResult) -> f64| summarize_distribution(&runs.iter().map(f).collect::<Vec<_>>());
        MetricSummaries {
            accuracy: pick(|r| r.metrics.accuracy),
            precision: pick(|r| r.metrics.precision),
            recall: pick(|r| r.metrics.recall),
            miss_rate: pick(|r| r.metrics.miss_rate),
            f1: pick(|r| r.metrics.f1),
        }
    }

    pub fn iter(&self) -> [(&'static str, &DistributionSummary); 5] {
        [
            ("accuracy", &self.accuracy),
            ("precision", &self.precision),
            ("recall", &self.recall),
            ("miss_rate", &self.miss_rate),
            ("f1", &self.f1),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyEntry {
    pub feature: String,
    pub count: usize,
}

/// How often each feature landed in a run's top-k importance list.
///
/// `entries` follow column order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub k: usize,
    pub runs: usize,
    pub entries: Vec<FrequencyEntry>,
}

impl FrequencyTable {
    /// Entries by descending count, ties in column order.
    pub fn ranked(&self) -> Vec<&FrequencyEntry> {
        let mut v: Vec<&FrequencyEntry> = self.entries.iter().collect();
        v.sort_by(|a, b| b.count.cmp(&a.count));
        v
    }

    pub fn top(&self, n: usize) -> Vec<String> {
        self.ranked().into_iter().take(n).map(|e| e.feature.clone()).collect()
    }

    pub fn count(&self, feature: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.feature == feature).map(|e| e.count)
    }
}

/// Counts top-`k` appearances of each of `columns` over `results`.
pub fn rank_feature_frequency(results: &[RunResult], columns: &[String], k: usize) -> Result<FrequencyTable> {
    let mut sorted_cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    sorted_cols.sort_unstable();
    let mut counts = vec![0usize; columns.len()];
    for r in results {
        let mut names: Vec<&str> = r.ranking.names().collect();
        names.sort_unstable();
        if names != sorted_cols {
            return Err(Error::InconsistentSchema);
        }
        for name in r.ranking.top(k) {
            let j = columns.iter().position(|c| c == name).ok_or(Error::InconsistentSchema)?;
            counts[j] += 1;
        }
    }
    Ok(FrequencyTable {
        k,
        runs: results.len(),
        entries: columns
            .iter()
            .zip(counts)
            .map(|(feature, count)| FrequencyEntry { feature: feature.clone(), count })
            .collect(),
    })
}

/// Provenance of a feature subset chosen by a previous full pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSelection {
    pub source_seed: u64,
    pub source_runs: usize,
    pub frequency: FrequencyTable,
    pub full_accuracy: DistributionSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub format_version: u32,
    /// Aggregation used for per-class metrics (always `"macro"`).
    pub averaging: String,
    pub master_seed: u64,
    pub config: CvConfig,
    pub columns: Vec<String>,
    pub summary: MetricSummaries,
    pub frequency: FrequencyTable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<SubsetSelection>,
    /// Effective pipeline settings recorded by the caller.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub pipeline: BTreeMap<String, String>,
    pub runs: Vec<RunResult>,
}

impl AggregateReport {
    pub fn new(config: CvConfig, columns: Vec<String>, runs: Vec<RunResult>, frequency: FrequencyTable) -> Self {
        AggregateReport {
            format_version: REPORT_FORMAT_VERSION,
            averaging: "macro".into(),
            master_seed: config.seed,
            summary: MetricSummaries::from_runs(&runs),
            config,
            columns,
            frequency,
            selection: None,
            pipeline: BTreeMap::new(),
            runs,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: AggregateReport = serde_json::from_str(text)?;
        if report.format_version != REPORT_FORMAT_VERSION {
            return Err(Error::SchemaMismatch(format!(
                "report format version {} (expected {REPORT_FORMAT_VERSION})",
                report.format_version
            )));
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{ConfusionMatrix, MetricSet};
    use crate::svm::ImportanceRanking;
    use proptest::prelude::*;

    fn run(order: &[&str]) -> RunResult {
        let names: Vec<String> = order.iter().map(|s| s.to_string()).collect();
        let scores: Vec<f64> = (0..names.len()).rev().map(|x| x as f64).collect();
        RunResult {
            run: 0,
            held_out: vec![],
            predicted: vec![],
            confusion: ConfusionMatrix::default(),
            metrics: MetricSet {
                accuracy: 0.0,
                precision: 0.0,
                recall: 0.0,
                miss_rate: 0.0,
                f1: 0.0,
                undefined_precision: 0,
            },
            ranking: ImportanceRanking::from_scores(&names, &scores),
        }
    }

    fn cols(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn quartiles() {
        let s = summarize_distribution(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max, s.mean), (1.0, 2.0, 3.0, 4.0, 5.0, 3.0));
        let s = summarize_distribution(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!((s.q1, s.median, s.q3), (1.75, 2.5, 3.25));
        let s = summarize_distribution(&[0.5]);
        assert_eq!((s.min, s.max, s.mean, s.whisker_low, s.whisker_high), (0.5, 0.5, 0.5, 0.5, 0.5));
    }

    #[test]
    fn whiskers_exclude_outliers() {
        let s = summarize_distribution(&[1.0, 2.0, 2.0, 3.0, 3.0, 100.0]);
        assert_eq!(s.whisker_high, 3.0);
        assert_eq!(s.whisker_low, 1.0);
        assert_eq!(s.max, 100.0);
    }

    #[test]
    fn frequency_counts() {
        let c = cols(&["a", "b", "c"]);
        let runs = vec![run(&["a", "b", "c"]), run(&["a", "c", "b"]), run(&["b", "a", "c"])];
        let t = rank_feature_frequency(&runs, &c, 1).unwrap();
        assert_eq!(t.count("a"), Some(2));
        assert_eq!(t.count("b"), Some(1));
        assert_eq!(t.top(2), vec!["a".to_string(), "b".to_string()]);
        let all = rank_feature_frequency(&runs, &c, 3).unwrap();
        assert!(all.entries.iter().all(|e| e.count == 3));
    }

    #[test]
    fn frequency_ties_follow_column_order() {
        let c = cols(&["x", "y", "z"]);
        let runs = vec![run(&["z", "x", "y"]), run(&["y", "x", "z"])];
        let t = rank_feature_frequency(&runs, &c, 1).unwrap();
        assert_eq!(t.top(2), vec!["y".to_string(), "z".to_string()]);
    }

    #[test]
    fn frequency_schema_mismatch() {
        let runs = vec![run(&["a", "b"]), run(&["a", "q"])];
        assert!(matches!(
            rank_feature_frequency(&runs, &cols(&["a", "b"]), 1),
            Err(Error::InconsistentSchema)
        ));
    }

    proptest! {
        #[test]
        fn frequency_totals(perms in prop::collection::vec(Just(vec!["f0", "f1", "f2", "f3", "f4", "f5"]).prop_shuffle(), 1..40), k in 1usize..=6) {
            let c = cols(&["f0", "f1", "f2", "f3", "f4", "f5"]);
            let runs: Vec<RunResult> = perms.iter().map(|p| run(p)).collect();
            let t = rank_feature_frequency(&runs, &c, k).unwrap();
            prop_assert_eq!(t.entries.iter().map(|e| e.count).sum::<usize>(), k * runs.len());
            prop_assert!(t.entries.iter().all(|e| e.count <= runs.len()));
        }

        #[test]
        fn summary_ordering(v in prop::collection::vec(-1e3f64..1e3, 1..50)) {
            let s = summarize_distribution(&v);
            prop_assert!(s.min <= s.whisker_low && s.whisker_low <= s.whisker_high);
            prop_assert!(s.q1 <= s.median && s.median <= s.q3);
            prop_assert!(s.whisker_high <= s.max);
            prop_assert!(s.min <= s.mean + 1e-9 && s.mean <= s.max + 1e-9);
        }
    }
}
