use std::cmp::Ordering;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::smo::{train_binary_smo, BinarySvmModel};
use super::standardize::Standardizer;
use super::{Kernel, SvmConfig};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::ingest::ExpertiseClass;
use crate::rng;

/// Binary model separating `positive` (decision > 0) from `negative`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub positive: ExpertiseClass,
    pub negative: ExpertiseClass,
    pub model: BinarySvmModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassModel {
    /// Feature names the model expects, in order.
    pub schema: Vec<String>,
    pub standardizer: Standardizer,
    pub pairs: Vec<PairModel>,
    pub config: SvmConfig,
    /// Standardized training rows in canonical order, kept for permutation
    /// importance.
    pub training: Vec<(ExpertiseClass, Vec<f64>)>,
}

/// Votes and summed winning margins of one prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub class: ExpertiseClass,
    pub votes: [u32; 3],
    pub margins: [f64; 3],
}

/// Features ordered by descending importance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    pub entries: Vec<(String, f64)>,
}

impl ImportanceRanking {
    /// Sorts `(name, score)` pairs descending, keeping the given order for ties.
    pub fn from_scores(names: &[String], scores: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..names.len()).collect();
        order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
        ImportanceRanking {
            entries: order.into_iter().map(|i| (names[i].clone(), scores[i])).collect(),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn top(&self, k: usize) -> Vec<&str> {
        self.names().take(k).collect()
    }
}

fn pairs() -> [(ExpertiseClass, ExpertiseClass); 3] {
    use ExpertiseClass::*;
    [(Expert, Intermediate), (Expert, Novice), (Intermediate, Novice)]
}

fn row_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Fits the standardizer and the three pairwise binary models.
///
/// Rows are put into a canonical order (class, participant id, values)
/// first, so the model does not depend on the input row order.
pub fn train_multiclass(matrix: &FeatureMatrix, config: &SvmConfig) -> Result<MulticlassModel> {
    let labels = matrix.require_labels()?;
    for c in ExpertiseClass::ALL {
        if !labels.contains(&c) {
            return Err(Error::ClassMissing(c.to_string()));
        }
    }
    for (row, r) in matrix.rows.iter().enumerate() {
        if let Some(column) = r.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { row, column });
        }
    }
    let mut order: Vec<usize> = (0..matrix.n_rows()).collect();
    order.sort_by(|&a, &b| {
        labels[a]
            .cmp(&labels[b])
            .then_with(|| matrix.ids[a].cmp(&matrix.ids[b]))
            .then_with(|| row_cmp(&matrix.rows[a], &matrix.rows[b]))
    });
    let raw: Vec<Vec<f64>> = order.iter().map(|&i| matrix.rows[i].clone()).collect();
    let standardizer = Standardizer::fit(&raw);
    let training: Vec<(ExpertiseClass, Vec<f64>)> = order
        .iter()
        .zip(standardizer.transform_all(&raw))
        .map(|(&i, z)| (labels[i], z))
        .collect();

    let params = config.smo_params();
    let pairs = pairs()
        .into_iter()
        .map(|(positive, negative)| {
            let (x, y): (Vec<Vec<f64>>, Vec<f64>) = training
                .iter()
                .filter(|(c, _)| *c == positive || *c == negative)
                .map(|(c, z)| (z.clone(), if *c == positive { 1.0 } else { -1.0 }))
                .unzip();
            let (model, _) = train_binary_smo(&x, &y, &params)?;
            Ok(PairModel { positive, negative, model })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(MulticlassModel {
        schema: matrix.columns.clone(),
        standardizer,
        pairs,
        config: *config,
        training,
    })
}

/// Picks the class with most votes; ties go to the largest summed winning
/// margin, then to the earlier class.
pub fn resolve_votes(votes: [u32; 3], margins: [f64; 3]) -> ExpertiseClass {
    let mut best = 0;
    for c in 1..3 {
        let better = votes[c] > votes[best] || (votes[c] == votes[best] && margins[c] > margins[best]);
        if better {
            best = c;
        }
    }
    ExpertiseClass::from_index(best).unwrap()
}

fn decide_standardized(model: &MulticlassModel, z: &[f64]) -> Decision {
    let mut votes = [0u32; 3];
    let mut margins = [0.0f64; 3];
    for p in &model.pairs {
        let f = p.model.decision(z);
        let winner = if f > 0.0 { p.positive } else { p.negative };
        votes[winner.index()] += 1;
        margins[winner.index()] += f.abs();
    }
    Decision {
        class: resolve_votes(votes, margins),
        votes,
        margins,
    }
}

impl MulticlassModel {
    /// Full decision for a raw (unstandardized) feature row in schema order.
    pub fn decide(&self, x: &[f64]) -> Result<Decision> {
        if x.len() != self.schema.len() {
            return Err(Error::SchemaMismatch(format!(
                "model expects {} features, got {}",
                self.schema.len(),
                x.len()
            )));
        }
        if let Some(column) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { row: 0, column });
        }
        Ok(decide_standardized(self, &self.standardizer.transform(x)))
    }
}

pub fn predict(model: &MulticlassModel, x: &[f64]) -> Result<ExpertiseClass> {
    model.decide(x).map(|d| d.class)
}

/// Predicts every row of `matrix`, matching columns to the model schema by
/// name.
pub fn predict_matrix(model: &MulticlassModel, matrix: &FeatureMatrix) -> Result<Vec<ExpertiseClass>> {
    let names: Vec<&str> = model.schema.iter().map(String::as_str).collect();
    let cols = matrix.resolve(&names)?;
    matrix
        .rows
        .iter()
        .map(|r| {
            let x: Vec<f64> = cols.iter().map(|&c| r[c]).collect();
            predict(model, &x)
        })
        .collect()
}

fn training_accuracy(model: &MulticlassModel, rows: &[(ExpertiseClass, Vec<f64>)]) -> f64 {
    let hits = rows
        .iter()
        .filter(|(c, z)| decide_standardized(model, z).class == *c)
        .count();
    hits as f64 / rows.len().max(1) as f64
}

/// Ranks features by importance for this model.
///
/// Linear kernel: the sum over pairwise models of `|w_j|` in standardized
/// space. Other kernels: mean drop in training accuracy when feature `j` is
/// shuffled across the model's own training rows (clamped at 0).
pub fn feature_importance(model: &MulticlassModel) -> ImportanceRanking {
    let d = model.schema.len();
    let scores: Vec<f64> = match model.config.kernel {
        Kernel::Linear => {
            let mut s = vec![0.0; d];
            for p in &model.pairs {
                for (acc, w) in s.iter_mut().zip(p.model.weights().unwrap_or_default()) {
                    *acc += w.abs();
                }
            }
            s
        }
        Kernel::Rbf { .. } => {
            let base = training_accuracy(model, &model.training);
            let repeats = model.config.permutation_repeats.max(1);
            (0..d)
                .map(|j| {
                    let mut drop = 0.0;
                    for r in 0..repeats {
                        let mut rng = rng::stream(model.config.seed, "permutation", (j * repeats + r) as u64);
                        let mut column: Vec<f64> = model.training.iter().map(|(_, z)| z[j]).collect();
                        column.shuffle(&mut rng);
                        let shuffled: Vec<_> = model
                            .training
                            .iter()
                            .zip(column)
                            .map(|((c, z), v)| {
                                let mut z = z.clone();
                                z[j] = v;
                                (*c, z)
                            })
                            .collect();
                        drop += base - training_accuracy(model, &shuffled);
                    }
                    (drop / repeats as f64).max(0.0)
                })
                .collect()
        }
    };
    ImportanceRanking::from_scores(&model.schema, &scores)
}
