//! Sequential minimal optimization for the soft-margin SVM dual
//!
//! ```text
//! min_a  1/2 a^T Q a - e^T a   s.t.  y^T a = 0,  0 <= a_i <= C
//! Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! Working pairs are picked by the maximal-violating-pair rule with
//! second-order selection of the second index, and each pair is solved
//! analytically. The working-set choice is deterministic, so a fixed row
//! order always yields the same model.

use serde::{Deserialize, Serialize};

use super::Kernel;
use crate::error::{Error, Result};

/// Curvature used when a pair has a non-positive second derivative.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoParams {
    pub c: f64,
    pub kernel: Kernel,
    /// Stop once the maximal KKT violation `m(a) - M(a)` falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Record the dual objective after every iteration.
    pub record_history: bool,
}

impl Default for SmoParams {
    fn default() -> Self {
        SmoParams {
            c: 1.0,
            kernel: Kernel::Linear,
            tol: 1e-3,
            max_iter: 1_000_000,
            record_history: false,
        }
    }
}

/// A trained binary classifier `f(x) = sum_i coef_i K(sv_i, x) + bias`.
///
/// Positive decision values mean the `+1` class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvmModel {
    pub kernel: Kernel,
    pub c: f64,
    pub bias: f64,
    /// `alpha_i * y_i` of every support vector.
    pub coef: Vec<f64>,
    pub support_vectors: Vec<Vec<f64>>,
}

impl BinarySvmModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.coef
            .iter()
            .zip(&self.support_vectors)
            .map(|(c, sv)| c * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    /// Primal weight vector, available for the linear kernel.
    pub fn weights(&self) -> Option<Vec<f64>> {
        if !matches!(self.kernel, Kernel::Linear) {
            return None;
        }
        let d = self.support_vectors.first().map_or(0, Vec::len);
        let mut w = vec![0.0; d];
        for (c, sv) in self.coef.iter().zip(&self.support_vectors) {
            for (wj, xj) in w.iter_mut().zip(sv) {
                *wj += c * xj;
            }
        }
        Some(w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverStats {
    pub iterations: usize,
    /// Final `m(a) - M(a)`.
    pub kkt_gap: f64,
    /// `sum a - 1/2 a^T Q a` at the solution.
    pub dual_objective: f64,
    /// Full multiplier vector in training-row order.
    pub alpha: Vec<f64>,
    pub history: Vec<f64>,
}

struct Problem {
    k: Vec<Vec<f64>>,
    c: f64,
}

impl Problem {
    fn in_up(&self, a: f64, y: f64) -> bool {
        (y > 0.0 && a < self.c) || (y < 0.0 && a > 0.0)
    }

    fn in_low(&self, a: f64, y: f64) -> bool {
        (y > 0.0 && a > 0.0) || (y < 0.0 && a < self.c)
    }
}

fn dual_objective(alpha: &[f64], grad: &[f64]) -> f64 {
    // G = Q a - e, so 1/2 a^T Q a - e^T a = 1/2 a^T (G - e)
    -0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
}

/// Trains a binary soft-margin SVM on rows `x` with labels `y` in `{-1, +1}`.
pub fn train_binary_smo(x: &[Vec<f64>], y: &[f64], params: &SmoParams) -> Result<(BinarySvmModel, SolverStats)> {
    if x.len() != y.len() {
        return Err(Error::SchemaMismatch(format!("{} rows vs {} labels", x.len(), y.len())));
    }
    if let Some(&bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(Error::SchemaMismatch(format!("binary label must be +1 or -1, got {bad}")));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::SingleClassInput);
    }
    let d = x[0].len();
    for (row, r) in x.iter().enumerate() {
        if r.len() != d {
            return Err(Error::SchemaMismatch(format!("row {row} has {} features, expected {d}", r.len())));
        }
        if let Some(column) = r.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature { row, column });
        }
    }
    if !(params.c > 0.0) || !(params.tol > 0.0) {
        return Err(Error::Config("C and tol must be positive".into()));
    }

    let n = x.len();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| params.kernel.eval(&x[i], &x[j])).collect())
        .collect();
    let p = Problem { k, c: params.c };

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    let kkt_gap = loop {
        // first index: maximal violation among the "up" set
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if p.in_up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > g_max {
                    g_max = v;
                    i_sel = t;
                }
            }
        }
        // second index: largest guaranteed decrease among the "low" set
        let mut g_max2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !p.in_low(alpha[t], y[t]) {
                continue;
            }
            let v = y[t] * grad[t];
            g_max2 = g_max2.max(v);
            let b = g_max + v;
            if i_sel != usize::MAX && b > 0.0 {
                let mut a = p.k[i_sel][i_sel] + p.k[t][t] - 2.0 * p.k[i_sel][t];
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j_sel = t;
                }
            }
        }
        let gap = g_max + g_max2;
        if gap < params.tol || j_sel == usize::MAX {
            break gap;
        }
        if iterations >= params.max_iter {
            return Err(Error::NotConverged { iterations, gap });
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let c = p.c;
        let mut quad = p.k[i][i] + p.k[j][j] - 2.0 * p.k[i][j];
        if quad <= 0.0 {
            quad = TAU;
        }
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * p.k[t][i] * di + y[j] * p.k[t][j] * dj);
        }
        if params.record_history {
            history.push(dual_objective(&alpha, &grad));
        }
    };

    // offset from free multipliers, or the middle of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_n) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= p.c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free_n += 1;
        }
    }
    let rho = if free_n > 0 {
        free_sum / free_n as f64
    } else {
        0.5 * (ub + lb)
    };

    let support: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    let model = BinarySvmModel {
        kernel: params.kernel,
        c: params.c,
        bias: -rho,
        coef: support.iter().map(|&t| alpha[t] * y[t]).collect(),
        support_vectors: support.iter().map(|&t| x[t].clone()).collect(),
    };
    let stats = SolverStats {
        iterations,
        kkt_gap,
        dual_objective: dual_objective(&alpha, &grad),
        alpha,
        history,
    };
    Ok((model, stats))
}
