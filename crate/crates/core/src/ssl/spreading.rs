//! Graph label spreading over a normalized Gaussian affinity graph.
//!
//! Labels are one-hot encoded into `F_0` (zero rows for unlabeled samples)
//! and propagated by `F_{t+1} = alpha * Z * F_t + (1 - alpha) * F_0`, where
//! `Z = D^{-1/2} W D^{-1/2}` is the symmetrically normalized affinity. The
//! fixed point is the classic closed form `(1 - alpha)(I - alpha Z)^{-1} F_0`,
//! which the tests use as an oracle.

use nalgebra::DMatrix;

use crate::classify::Standardizer;
use crate::dataset::UNLABELED;
use crate::ssl::MixedSet;
use crate::{Error, Result};

/// Default convergence threshold on the max-abs change per sweep.
pub const DEFAULT_TOL: f64 = 1e-6;
/// Default iteration cap.
pub const DEFAULT_MAX_ITER: usize = 1000;

/// Gaussian affinity graph with its normalized propagation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    /// Symmetric nonnegative weights, zero diagonal.
    pub w: DMatrix<f64>,
    /// `D^{-1/2} W D^{-1/2}`.
    pub z: DMatrix<f64>,
}

/// Median of all pairwise Euclidean distances between rows of `x`
/// (average of the two middle values for even pair counts).
pub fn median_pairwise_distance(x: &DMatrix<f64>) -> Result<f64> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::Config(
            "median distance: need at least two rows".into(),
        ));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = 0.0;
            for c in 0..x.ncols() {
                let diff = x[(i, c)] - x[(j, c)];
                acc += diff * diff;
            }
            dists.push(acc.sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = dists.len() / 2;
    Ok(if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    })
}

/// Builds the affinity graph `w_ij = exp(-||x_i - x_j||^2 / (2 sigma^2))`
/// with zero diagonal and its normalized propagation matrix. Errors when a
/// row's degree underflows to zero (sigma far too small).
pub fn build_affinity(x: &DMatrix<f64>, sigma: f64) -> Result<AffinityGraph> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::Config("affinity: need at least two rows".into()));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Config(format!(
            "affinity: sigma must be positive, got {sigma}"
        )));
    }
    let denom = 2.0 * sigma * sigma;
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = 0.0;
            for c in 0..x.ncols() {
                let diff = x[(i, c)] - x[(j, c)];
                acc += diff * diff;
            }
            let v = (-acc / denom).exp();
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    let mut inv_sqrt_deg = vec![0.0; n];
    for i in 0..n {
        let deg: f64 = w.row(i).iter().sum();
        if !(deg.is_finite() && deg > 0.0) {
            return Err(Error::Numeric(format!(
                "affinity: row {i} has zero degree (sigma too small)"
            )));
        }
        inv_sqrt_deg[i] = 1.0 / deg.sqrt();
    }
    let mut z = w.clone();
    for i in 0..n {
        for j in 0..n {
            z[(i, j)] *= inv_sqrt_deg[i] * inv_sqrt_deg[j];
        }
    }
    Ok(AffinityGraph { w, z })
}

/// Outcome of a spreading run.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadResult {
    /// One label per row; labeled rows keep their input labels.
    pub labels: Vec<i32>,
    /// Final class-score matrix `F`, one column per class code in
    /// `classes` order.
    pub scores: DMatrix<f64>,
    /// Distinct class codes (ascending) defining the score columns.
    pub classes: Vec<i32>,
    /// Whether the sweep change dropped below `tol` before `max_iter`.
    pub converged: bool,
    /// Sweeps performed.
    pub iterations: usize,
}

/// Iterates `F <- alpha Z F + (1 - alpha) F_0` from `F = F_0` until the
/// max-abs change falls below `tol` or `max_iter` sweeps pass. Unlabeled
/// rows (sentinel in `y`) start at zero and end at the argmax of their
/// scores, ties to the lowest class code.
pub fn label_spread(
    graph: &AffinityGraph,
    y: &[i32],
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SpreadResult> {
    let n = graph.z.nrows();
    if y.len() != n {
        return Err(Error::Config(format!(
            "spread: {} labels for {n} rows",
            y.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!(
            "spread: alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let mut classes: Vec<i32> = y.iter().copied().filter(|&v| v != UNLABELED).collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.is_empty() {
        return Err(Error::Config("spread: no labeled rows".into()));
    }

    let k = classes.len();
    let mut f0 = DMatrix::zeros(n, k);
    for (i, &label) in y.iter().enumerate() {
        if label != UNLABELED {
            let col = classes.binary_search(&label).unwrap();
            f0[(i, col)] = 1.0;
        }
    }

    let mut f = f0.clone();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        let mut next = &graph.z * &f;
        next *= alpha;
        next += &f0 * (1.0 - alpha);
        let delta = (&next - &f).abs().max();
        f = next;
        if delta < tol {
            converged = true;
            break;
        }
    }

    let mut labels = y.to_vec();
    for (i, label) in labels.iter_mut().enumerate() {
        if *label == UNLABELED {
            let mut best = 0usize;
            for c in 1..k {
                if f[(i, c)] > f[(i, best)] {
                    best = c;
                }
            }
            *label = classes[best];
        }
    }
    Ok(SpreadResult {
        labels,
        scores: f,
        classes,
        converged,
        iterations,
    })
}

/// Full spreading engine for a mixed set: standardize features, pick
/// `sigma` as `median pairwise distance / sqrt(2) * sigma_scale`, build the
/// graph, and spread.
pub fn label_spreading_engine(
    m: &MixedSet,
    alpha: f64,
    sigma_scale: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SpreadResult> {
    if !(sigma_scale.is_finite() && sigma_scale > 0.0) {
        return Err(Error::Config(format!(
            "spread: sigma_scale must be positive, got {sigma_scale}"
        )));
    }
    let std = Standardizer::fit(&m.x);
    let x = std.transform(&m.x);
    let sigma = median_pairwise_distance(&x)? / std::f64::consts::SQRT_2 * sigma_scale;
    if sigma <= 0.0 {
        return Err(Error::Numeric(
            "spread: all samples identical, sigma degenerates to zero".into(),
        ));
    }
    let graph = build_affinity(&x, sigma)?;
    label_spread(&graph, &m.y, alpha, tol, max_iter)
}
