use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, ConfusionMatrix, MetricSet};
use super::report::{rank_feature_frequency, AggregateReport, FrequencyTable, SubsetSelection};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::ingest::ExpertiseClass;
use crate::rng::{derive_seed, stream, StreamRng};
use crate::svm::{feature_importance, predict, train_multiclass, ImportanceRanking, SvmConfig};

/// Which columns of the cohort enter the model.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSelection {
    #[default]
    All,
    Named(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub runs: usize,
    pub seed: u64,
    pub features: FeatureSelection,
    pub svm: SvmConfig,
    /// Size of the per-run top list counted by the frequency table.
    pub top_k: usize,
    /// Execute runs on the rayon pool. Does not change the report.
    #[serde(skip, default = "default_parallel")]
    pub parallel: bool,
}

fn default_parallel() -> bool {
    true
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            runs: 1000,
            seed: 0,
            features: FeatureSelection::All,
            svm: SvmConfig::default(),
            top_k: 4,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run: usize,
    /// Held-out participant ids in class order (expert, intermediate, novice).
    pub held_out: Vec<String>,
    pub predicted: Vec<ExpertiseClass>,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricSet,
    pub ranking: ImportanceRanking,
}

/// Picks one row per class uniformly for the test set.
///
/// Returns `(train, test)` row indices; `test` is in class order and `train`
/// keeps the matrix order.
pub fn split_leave_one_per_group(matrix: &FeatureMatrix, rng: &mut StreamRng) -> Result<(Vec<usize>, Vec<usize>)> {
    let labels = matrix.require_labels()?;
    let mut test = Vec::with_capacity(3);
    for class in ExpertiseClass::ALL {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < 2 {
            return Err(Error::ClassMissing(format!(
                "class {class} has {} participant(s), at least 2 required",
                members.len()
            )));
        }
        test.push(members[rng.random_range(0..members.len())]);
    }
    let train = (0..labels.len()).filter(|i| !test.contains(i)).collect();
    Ok((train, test))
}

fn select_columns(matrix: &FeatureMatrix, features: &FeatureSelection) -> Result<FeatureMatrix> {
    match features {
        FeatureSelection::All => Ok(matrix.clone()),
        FeatureSelection::Named(names) => {
            if names.is_empty() {
                return Err(Error::Config("feature subset is empty".into()));
            }
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let idx = matrix.resolve(&refs)?;
            Ok(matrix.select(&idx))
        }
    }
}

fn single_run(matrix: &FeatureMatrix, labels: &[ExpertiseClass], config: &CvConfig, run: usize) -> Result<RunResult> {
    let mut rng = stream(config.seed, "cv-run", run as u64);
    let (train, test) = split_leave_one_per_group(matrix, &mut rng)?;
    let svm = SvmConfig {
        seed: derive_seed(config.seed, "importance", run as u64),
        ..config.svm
    };
    let model = train_multiclass(&matrix.subset_rows(&train), &svm)?;
    let mut confusion = ConfusionMatrix::default();
    let mut predicted = Vec::with_capacity(test.len());
    for &i in &test {
        let p = predict(&model, &matrix.rows[i])?;
        confusion.record(labels[i], p);
        predicted.push(p);
    }
    Ok(RunResult {
        run,
        held_out: test.iter().map(|&i| matrix.ids[i].clone()).collect(),
        predicted,
        confusion,
        metrics: compute_metrics(&confusion)?,
        ranking: feature_importance(&model),
    })
}

/// Runs `config.runs` independent split/train/score cycles and aggregates them.
pub fn run_repeated_cv(cohort: &FeatureMatrix, config: &CvConfig) -> Result<AggregateReport> {
    if config.runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    if config.top_k == 0 {
        return Err(Error::Config("top_k must be at least 1".into()));
    }
    let matrix = select_columns(cohort, &config.features)?;
    let labels = matrix.require_labels()?;
    let results: Vec<RunResult> = if config.parallel {
        (0..config.runs)
            .into_par_iter()
            .map(|i| single_run(&matrix, &labels, config, i))
            .collect::<Result<_>>()?
    } else {
        (0..config.runs)
            .map(|i| single_run(&matrix, &labels, config, i))
            .collect::<Result<_>>()?
    };
    let k = config.top_k.min(matrix.n_cols());
    let frequency = rank_feature_frequency(&results, &matrix.columns, k)?;
    log::info!("cv: {} runs over {} features", results.len(), matrix.n_cols());
    Ok(AggregateReport::new(config.clone(), matrix.columns.clone(), results, frequency))
}

/// Full-feature pass, top-k subset selection, reduced pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowReport {
    pub full: AggregateReport,
    pub frequency: FrequencyTable,
    pub reduced: AggregateReport,
}

/// Runs CV on all columns, keeps the `base.top_k` most frequent features and
/// reruns CV on that subset with the seed `derive_seed(seed, "reduced", 0)`.
pub fn reduced_model_workflow(cohort: &FeatureMatrix, base: &CvConfig) -> Result<WorkflowReport> {
    let full_cfg = CvConfig {
        features: FeatureSelection::All,
        ..base.clone()
    };
    let full = run_repeated_cv(cohort, &full_cfg)?;
    let frequency = full.frequency.clone();
    let subset = frequency.top(base.top_k.min(cohort.n_cols()));
    let reduced_cfg = CvConfig {
        features: FeatureSelection::Named(subset),
        seed: derive_seed(base.seed, "reduced", 0),
        ..base.clone()
    };
    let mut reduced = run_repeated_cv(cohort, &reduced_cfg)?;
    reduced.selection = Some(SubsetSelection {
        source_seed: base.seed,
        source_runs: base.runs,
        frequency: frequency.clone(),
        full_accuracy: full.summary.accuracy,
    });
    Ok(WorkflowReport { full, frequency, reduced })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FEATURE_NAMES;
    use ExpertiseClass::*;

    fn cohort(per_class: usize) -> FeatureMatrix {
        let mut m = FeatureMatrix::with_full_schema();
        m.columns = vec!["signal".into(), "noise".into()];
        for (k, c) in ExpertiseClass::ALL.into_iter().enumerate() {
            for i in 0..per_class {
                m.ids.push(format!("{}{i}", c.code()));
                m.labels.push(Some(c));
                let jitter = ((i * 7 + k * 3) % 5) as f64 * 0.05;
                m.rows.push(vec![k as f64 * 2.0 + jitter, ((i * 13 + k) % 7) as f64]);
                m.masks.push(vec![true, true]);
            }
        }
        m
    }

    #[test]
    fn split_shapes() {
        let m = cohort(5);
        let mut rng = stream(1, "t", 0);
        let (train, test) = split_leave_one_per_group(&m, &mut rng).unwrap();
        assert_eq!((train.len(), test.len()), (12, 3));
        let classes: Vec<_> = test.iter().map(|&i| m.labels[i].unwrap()).collect();
        assert_eq!(classes, vec![Expert, Intermediate, Novice]);

        let (train, test) = split_leave_one_per_group(&cohort(2), &mut rng).unwrap();
        assert_eq!((train.len(), test.len()), (3, 3));
    }

    #[test]
    fn split_requires_two_per_class() {
        let mut m = cohort(2);
        m.labels[0] = Some(Novice);
        let mut rng = stream(1, "t", 0);
        assert!(matches!(split_leave_one_per_group(&m, &mut rng), Err(Error::ClassMissing(_))));
    }

    #[test]
    fn split_is_uniform() {
        let m = cohort(5);
        let mut counts = vec![0usize; m.n_rows()];
        let mut rng = stream(3, "uniform", 0);
        let draws = 10_000;
        for _ in 0..draws {
            for i in split_leave_one_per_group(&m, &mut rng).unwrap().1 {
                counts[i] += 1;
            }
        }
        for c in counts {
            let f = c as f64 / draws as f64;
            assert!((f - 0.2).abs() <= 0.02, "held-out frequency {f}");
        }
    }

    #[test]
    fn single_run_report() {
        let cfg = CvConfig { runs: 1, seed: 5, ..Default::default() };
        let r = run_repeated_cv(&cohort(4), &cfg).unwrap();
        assert_eq!(r.runs.len(), 1);
        let s = r.summary.accuracy;
        assert_eq!(s.min, s.max);
        assert_eq!(s.min, s.mean);
        assert_eq!(r.runs[0].confusion.total(), 3);
    }

    #[test]
    fn separable_cohort_scores_well_and_ranks_signal() {
        let cfg = CvConfig { runs: 50, seed: 11, top_k: 1, ..Default::default() };
        let r = run_repeated_cv(&cohort(5), &cfg).unwrap();
        assert!(r.summary.accuracy.mean > 0.9);
        assert_eq!(r.frequency.top(1), vec!["signal".to_string()]);
    }

    #[test]
    fn parallel_matches_serial() {
        let mut cfg = CvConfig { runs: 30, seed: 2, ..Default::default() };
        let a = run_repeated_cv(&cohort(5), &cfg).unwrap();
        cfg.parallel = false;
        let mut b = run_repeated_cv(&cohort(5), &cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        b.config.parallel = true;
        assert_eq!(a, b);
    }

    #[test]
    fn zero_runs_rejected() {
        let cfg = CvConfig { runs: 0, ..Default::default() };
        assert!(matches!(run_repeated_cv(&cohort(3), &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_subset_column() {
        let cfg = CvConfig {
            runs: 1,
            features: FeatureSelection::Named(vec![FEATURE_NAMES[0].into()]),
            ..Default::default()
        };
        assert!(matches!(run_repeated_cv(&cohort(3), &cfg), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn workflow_runs_end_to_end() {
        let cfg = CvConfig { runs: 3, seed: 4, top_k: 1, ..Default::default() };
        let w = reduced_model_workflow(&cohort(3), &cfg).unwrap();
        assert_eq!(w.reduced.columns.len(), 1);
        assert_eq!(w.reduced.config.seed, derive_seed(4, "reduced", 0));
        assert!(w.reduced.selection.is_some());
    }
}
