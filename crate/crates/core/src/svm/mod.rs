//! Support vector classification built from scratch: an SMO solver for the
//! binary soft-margin dual, one-vs-one aggregation over the three expertise
//! classes, and per-model feature importance.

mod io;
mod multiclass;
mod smo;
mod standardize;

use serde::{Deserialize, Serialize};

pub use io::{load_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use multiclass::{
    feature_importance, predict, predict_matrix, resolve_votes, train_multiclass, Decision,
    ImportanceRanking, MulticlassModel, PairModel,
};
pub use smo::{train_binary_smo, BinarySvmModel, SmoParams, SolverStats};
pub use standardize::Standardizer;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Linear => "linear",
            Kernel::Rbf { .. } => "rbf",
        }
    }
}

/// Training configuration shared by all pairwise models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub kernel: Kernel,
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Seed for permutation importance (non-linear kernels only).
    pub seed: u64,
    pub permutation_repeats: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            kernel: Kernel::Linear,
            c: 1.0,
            tol: 1e-3,
            max_iter: 1_000_000,
            seed: 0,
            permutation_repeats: 5,
        }
    }
}

impl SvmConfig {
    pub fn smo_params(&self) -> SmoParams {
        SmoParams {
            c: self.c,
            kernel: self.kernel,
            tol: self.tol,
            max_iter: self.max_iter,
            record_history: false,
        }
    }
}
