use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ExpertiseClass;

/// Counts indexed `[true class][predicted class]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; 3]; 3]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn record(&mut self, truth: ExpertiseClass, predicted: ExpertiseClass) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    fn row_sum(&self, r: usize) -> u64 {
        self.counts[r].iter().sum()
    }

    fn col_sum(&self, c: usize) -> u64 {
        (0..3).map(|r| self.counts[r][c]).sum()
    }
}

/// Accuracy plus macro-averaged precision, recall, miss rate and F1.
///
/// Macro means run over classes with at least one true instance. A class
/// that is never predicted has undefined precision; it contributes 0 and is
/// counted in `undefined_precision`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub miss_rate: f64,
    pub f1: f64,
    pub undefined_precision: u32,
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<MetricSet> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let (mut p_sum, mut r_sum, mut m_sum, mut f_sum) = (0.0, 0.0, 0.0, 0.0);
    let mut present = 0u32;
    let mut undefined = 0u32;
    for c in 0..3 {
        let support = cm.row_sum(c);
        if support == 0 {
            continue;
        }
        present += 1;
        let tp = cm.counts[c][c] as f64;
        let predicted = cm.col_sum(c);
        let precision = if predicted == 0 {
            undefined += 1;
            0.0
        } else {
            tp / predicted as f64
        };
        let recall = tp / support as f64;
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        p_sum += precision;
        r_sum += recall;
        m_sum += 1.0 - recall;
        f_sum += f1;
    }
    let k = f64::from(present);
    Ok(MetricSet {
        accuracy: cm.trace() as f64 / total as f64,
        precision: p_sum / k,
        recall: r_sum / k,
        miss_rate: m_sum / k,
        f1: f_sum / k,
        undefined_precision: undefined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let m = compute_metrics(&ConfusionMatrix::from_counts([[1, 0, 0], [0, 1, 0], [0, 0, 1]])).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1, m.miss_rate), (1.0, 1.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn worked_example() {
        let m = compute_metrics(&ConfusionMatrix::from_counts([[2, 1, 0], [0, 3, 0], [1, 0, 2]])).unwrap();
        assert!((m.accuracy - 7.0 / 9.0).abs() < 1e-15);
        // per class precision 2/3, 3/4, 1; recall 2/3, 1, 2/3
        let p = (2.0 / 3.0 + 0.75 + 1.0) / 3.0;
        let r = (2.0 / 3.0 + 1.0 + 2.0 / 3.0) / 3.0;
        let f = (2.0 / 3.0 + 2.0 * 0.75 / 1.75 + 0.8) / 3.0;
        assert!((m.precision - p).abs() < 1e-12);
        assert!((m.recall - r).abs() < 1e-12);
        assert!((m.miss_rate - (1.0 - r)).abs() < 1e-12);
        assert!((m.f1 - f).abs() < 1e-12);
        assert_eq!(m.undefined_precision, 0);
    }

    #[test]
    fn total_failure() {
        let m = compute_metrics(&ConfusionMatrix::from_counts([[0, 1, 0], [0, 0, 1], [1, 0, 0]])).unwrap();
        assert_eq!((m.accuracy, m.recall, m.miss_rate, m.f1), (0.0, 0.0, 1.0, 0.0));
    }

    #[test]
    fn never_predicted_class_is_flagged() {
        let m = compute_metrics(&ConfusionMatrix::from_counts([[1, 0, 0], [1, 0, 0], [0, 0, 1]])).unwrap();
        assert_eq!(m.undefined_precision, 1);
        assert!((m.precision - (0.5 + 0.0 + 1.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_matrix() {
        assert!(matches!(compute_metrics(&ConfusionMatrix::default()), Err(Error::EmptyMatrix)));
    }
}
