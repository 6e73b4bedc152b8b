//! Soft-margin binary SVM trained by SMO-style dual coordinate optimization.
//!
//! The dual problem is the usual box-constrained QP with per-sample costs
//! `0 <= alpha_i <= C_i` and the equality constraint `sum alpha_i y_i = 0`.
//! Per-sample costs matter for the transductive SVM, which anneals the cost
//! of unlabeled points separately from labeled ones; a cost of exactly zero
//! removes a point from the problem without reshaping the matrices.
//!
//! Pair selection is deterministic: the first index scan is in ascending
//! order, the partner maximizes `|E_i - E_j|` over non-bound points with
//! ties to the lowest index, and the fallbacks scan ascending. The same
//! data always produces the same machine.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// KKT tolerance used by every SVM in the crate.
pub const DEFAULT_TOL: f64 = 1e-4;

/// Kernel functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// Dot product.
    Linear,
    /// `exp(-gamma * ||a - b||^2)`.
    Rbf { gamma: f64 },
}

impl Kernel {
    fn eval(self, x: &DMatrix<f64>, i: usize, z: &DMatrix<f64>, j: usize) -> f64 {
        match self {
            Kernel::Linear => {
                let mut dot = 0.0;
                for col in 0..x.ncols() {
                    dot += x[(i, col)] * z[(j, col)];
                }
                dot
            }
            Kernel::Rbf { gamma } => {
                let mut d2 = 0.0;
                for col in 0..x.ncols() {
                    let diff = x[(i, col)] - z[(j, col)];
                    d2 += diff * diff;
                }
                (-gamma * d2).exp()
            }
        }
    }
}

/// A trained binary machine: the support vectors with their `alpha_i y_i`
/// coefficients, the bias, and the kernel.
pub struct BinarySvm {
    support: DMatrix<f64>,
    alpha_y: Vec<f64>,
    bias: f64,
    kernel: Kernel,
    /// Final dual coefficients for all training points (support or not).
    /// Only the determinism test reads them; they assert that two fits of
    /// the same data agree bit for bit, not merely in their decisions.
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) alpha_full: Vec<f64>,
}

impl BinarySvm {
    /// Trains on rows of `x` with targets `y in {-1, +1}` and per-sample
    /// costs `costs` (zero cost excludes the point).
    pub fn train(
        x: &DMatrix<f64>,
        y: &[f64],
        costs: &[f64],
        kernel: Kernel,
        tol: f64,
    ) -> Result<BinarySvm> {
        let n = x.nrows();
        if y.len() != n || costs.len() != n {
            return Err(Error::Config("svm: mismatched input lengths".into()));
        }
        if y.iter().any(|&t| t != 1.0 && t != -1.0) {
            return Err(Error::Config("svm: targets must be +1 or -1".into()));
        }
        if costs.iter().any(|&c| !(c.is_finite() && c >= 0.0)) {
            return Err(Error::Config("svm: costs must be finite and >= 0".into()));
        }
        if !y
            .iter()
            .zip(costs)
            .any(|(&t, &c)| t > 0.0 && c > 0.0)
            || !y
                .iter()
                .zip(costs)
                .any(|(&t, &c)| t < 0.0 && c > 0.0)
        {
            return Err(Error::Config(
                "svm: need at least one active point per side".into(),
            ));
        }

        // Precompute the Gram matrix; problem sizes stay small enough.
        let gram = {
            let mut g = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = kernel.eval(x, i, x, j);
                    g[(i, j)] = v;
                    g[(j, i)] = v;
                }
            }
            g
        };

        let mut alpha = vec![0.0; n];
        let mut bias = 0.0;
        // Error cache: E_i = f(x_i) - y_i; with all alpha zero, f = 0.
        let mut err: Vec<f64> = y.iter().map(|&t| -t).collect();

        let mut examine_all = true;
        let mut epochs = 0usize;
        loop {
            let mut changed = 0usize;
            for i in 0..n {
                if costs[i] <= 0.0 {
                    continue;
                }
                let non_bound_i = alpha[i] > 0.0 && alpha[i] < costs[i];
                if examine_all || non_bound_i {
                    changed += usize::from(examine(
                        i, &gram, y, costs, tol, &mut alpha, &mut bias, &mut err,
                    ));
                }
            }
            epochs += 1;
            if examine_all {
                if changed == 0 {
                    break;
                }
                examine_all = false;
            } else if changed == 0 {
                examine_all = true;
            }
            if epochs > 20_000 {
                break; // defensive cap; tolerance loops terminate long before
            }
        }

        // Keep only support vectors for prediction.
        let sv: Vec<usize> = (0..n).filter(|&i| alpha[i] > 0.0).collect();
        let mut support = DMatrix::zeros(sv.len(), x.ncols());
        let mut alpha_y = Vec::with_capacity(sv.len());
        for (row, &i) in sv.iter().enumerate() {
            support.set_row(row, &x.row(i));
            alpha_y.push(alpha[i] * y[i]);
        }
        Ok(BinarySvm {
            support,
            alpha_y,
            bias,
            kernel,
            alpha_full: alpha,
        })
    }

    /// Decision value for row `i` of `z`.
    pub fn decision_row(&self, z: &DMatrix<f64>, i: usize) -> f64 {
        let mut f = self.bias;
        for (sv, &ay) in self.alpha_y.iter().enumerate() {
            f += ay * self.kernel.eval(&self.support, sv, z, i);
        }
        f
    }

    /// Decision values for every row of `z`.
    pub fn decision(&self, z: &DMatrix<f64>) -> Vec<f64> {
        (0..z.nrows()).map(|i| self.decision_row(z, i)).collect()
    }

    /// Squared norm of the separating function in feature space,
    /// `sum_ij alpha_i alpha_j y_i y_j K(x_i, x_j)`.
    pub fn weight_norm_sq(&self) -> f64 {
        let mut norm = 0.0;
        for i in 0..self.alpha_y.len() {
            for j in 0..self.alpha_y.len() {
                norm += self.alpha_y[i]
                    * self.alpha_y[j]
                    * self.kernel.eval(&self.support, i, &self.support, j);
            }
        }
        norm
    }
}

/// Examines index `i`; returns true when a pair update changed the duals.
#[allow(clippy::too_many_arguments)]
fn examine(
    i: usize,
    gram: &DMatrix<f64>,
    y: &[f64],
    costs: &[f64],
    tol: f64,
    alpha: &mut [f64],
    bias: &mut f64,
    err: &mut [f64],
) -> bool {
    let r = err[i] * y[i];
    let violates = (r < -tol && alpha[i] < costs[i]) || (r > tol && alpha[i] > 0.0);
    if !violates {
        return false;
    }
    let n = y.len();
    fn non_bound(j: usize, costs: &[f64], alpha: &[f64]) -> bool {
        costs[j] > 0.0 && alpha[j] > 0.0 && alpha[j] < costs[j]
    }

    // Heuristic partner: maximize |E_i - E_j| over non-bound points.
    let mut best: Option<(f64, usize)> = None;
    for j in 0..n {
        if j != i && non_bound(j, costs, alpha) {
            let gap = (err[i] - err[j]).abs();
            if best.map_or(true, |(g, _)| gap > g) {
                best = Some((gap, j));
            }
        }
    }
    if let Some((_, j)) = best {
        if take_step(i, j, gram, y, costs, alpha, bias, err) {
            return true;
        }
    }
    // Fallbacks: all non-bound, then everything, in ascending order.
    for j in 0..n {
        if j != i
            && non_bound(j, costs, alpha)
            && take_step(i, j, gram, y, costs, alpha, bias, err)
        {
            return true;
        }
    }
    for j in 0..n {
        if j != i
            && costs[j] > 0.0
            && !non_bound(j, costs, alpha)
            && take_step(i, j, gram, y, costs, alpha, bias, err)
        {
            return true;
        }
    }
    false
}

/// Joint analytic update of `(alpha_i, alpha_j)`; returns true on progress.
#[allow(clippy::too_many_arguments)]
fn take_step(
    i: usize,
    j: usize,
    gram: &DMatrix<f64>,
    y: &[f64],
    costs: &[f64],
    alpha: &mut [f64],
    bias: &mut f64,
    err: &mut [f64],
) -> bool {
    if i == j {
        return false;
    }
    let (ai, aj) = (alpha[i], alpha[j]);
    let s = y[i] * y[j];
    // Feasible segment for alpha_j given the equality constraint and both
    // per-sample boxes.
    let (lo, hi) = if s > 0.0 {
        let gamma = ai + aj;
        ((gamma - costs[i]).max(0.0), gamma.min(costs[j]))
    } else {
        let gamma = ai - aj;
        ((-gamma).max(0.0), (costs[i] - gamma).min(costs[j]))
    };
    if lo >= hi - 1e-12 {
        return false;
    }
    let eta = gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)];
    if eta <= 1e-12 {
        return false; // degenerate curvature; a later pair will make progress
    }
    let mut aj_new = aj + y[j] * (err[i] - err[j]) / eta;
    aj_new = aj_new.clamp(lo, hi);
    if (aj_new - aj).abs() < 1e-12 * (aj_new + aj + 1e-12) {
        return false;
    }
    let ai_new = ai + s * (aj - aj_new);

    // Bias update (average when both new duals are at bounds).
    let b1 = *bias
        - err[i]
        - y[i] * (ai_new - ai) * gram[(i, i)]
        - y[j] * (aj_new - aj) * gram[(i, j)];
    let b2 = *bias
        - err[j]
        - y[i] * (ai_new - ai) * gram[(i, j)]
        - y[j] * (aj_new - aj) * gram[(j, j)];
    let new_bias = if ai_new > 0.0 && ai_new < costs[i] {
        b1
    } else if aj_new > 0.0 && aj_new < costs[j] {
        b2
    } else {
        (b1 + b2) / 2.0
    };

    let delta_b = new_bias - *bias;
    for t in 0..y.len() {
        err[t] += y[i] * (ai_new - ai) * gram[(i, t)]
            + y[j] * (aj_new - aj) * gram[(j, t)]
            + delta_b;
    }
    alpha[i] = ai_new;
    alpha[j] = aj_new;
    *bias = new_bias;
    true
}
