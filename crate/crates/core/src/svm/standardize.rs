use serde::{Deserialize, Serialize};

const STD_FLOOR: f64 = 1e-12;

/// Per-feature z-scoring fitted on training rows only.
///
/// Uses the population standard deviation. Features whose spread is below
/// the floor carry no information and map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Standardizer { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if *s > STD_FLOOR { (v - m) / s } else { 0.0 })
            .collect()
    }

    pub fn transform_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_feature_maps_to_zero() {
        let rows = vec![vec![0.1, 1.0], vec![0.1, 3.0], vec![0.1, 5.0]];
        let s = Standardizer::fit(&rows);
        for r in s.transform_all(&rows) {
            assert_eq!(r[0], 0.0);
        }
        assert_eq!(s.transform(&[7.0, 3.0]), vec![0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn standardized_training_rows_have_zero_mean_unit_std(
            rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..20)
        ) {
            let s = Standardizer::fit(&rows);
            let z = s.transform_all(&rows);
            let n = rows.len() as f64;
            for j in 0..3 {
                let m: f64 = z.iter().map(|r| r[j]).sum::<f64>() / n;
                prop_assert!(m.abs() < 1e-9);
                if s.std[j] > 1e-6 {
                    let v: f64 = z.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n;
                    prop_assert!((v.sqrt() - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
