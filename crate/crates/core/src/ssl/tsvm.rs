//! Transductive SVM by label-switching local search.
//!
//! The binary solver minimizes
//!
//! ```text
//! C * sum_labeled hinge(y_i f(x_i))
//!   + C_u * sum_unlabeled min(hinge(f(x_j)), hinge(-f(x_j)))
//!   + ||w||
//! ```
//!
//! locally: unlabeled labels start from the supervised SVM's predictions,
//! then opposite-labeled unlabeled pairs are swapped whenever retraining
//! with the swap strictly lowers the objective, while the unlabeled cost is
//! annealed geometrically from `C_u/100` up to `C_u`. The unlabeled hinge
//! in the objective takes the cheaper of the two label choices, so the
//! objective depends on the assignment only through the trained model.
//! Everything is deterministic given the inputs.

use nalgebra::DMatrix;

use crate::classify::{BinarySvm, Kernel, Standardizer, SVM_DEFAULT_TOL as DEFAULT_TOL};
use crate::dataset::UNLABELED;
use crate::ssl::MixedSet;
use crate::{Error, Result};

/// A swap only counts as an improvement when it beats this margin.
const IMPROVE_EPS: f64 = 1e-12;

/// Objective trace of one annealing phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTrace {
    /// Unlabeled cost active during the phase.
    pub c_u: f64,
    /// Objective after retraining at this phase's cost, before any swap.
    pub initial_objective: f64,
    /// Objective after each accepted swap, in acceptance order.
    pub accepted_objectives: Vec<f64>,
}

/// Result of the binary transductive solve.
#[derive(Debug, Clone, PartialEq)]
pub struct TsvmBinary {
    /// Decision values for every row of the mixed input (labeled block
    /// first), in the solver's standardized space.
    pub decisions: Vec<f64>,
    /// Final `+-1` assignment of the unlabeled rows.
    pub pseudo_labels: Vec<f64>,
    /// Objective traces, one per annealing phase.
    pub phases: Vec<PhaseTrace>,
    /// False only if the per-phase swap budget was exhausted.
    pub converged: bool,
}

/// Multiclass pseudo-labeling outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TsvmLabels {
    /// One label per mixed-set row; labeled rows keep their true labels.
    pub labels: Vec<i32>,
    /// False only if some binary subproblem hit its swap budget.
    pub converged: bool,
}

/// Evaluates the transductive objective for a trained model.
fn objective(
    model: &BinarySvm,
    x_all: &DMatrix<f64>,
    y_l: &[f64],
    n_labeled: usize,
    c: f64,
    c_u: f64,
) -> f64 {
    let f = model.decision(x_all);
    let mut labeled_hinge = 0.0;
    for (i, &y) in y_l.iter().enumerate() {
        labeled_hinge += (1.0 - y * f[i]).max(0.0);
    }
    let mut unlabeled_hinge = 0.0;
    for fi in f.iter().skip(n_labeled) {
        let plus = (1.0 - fi).max(0.0);
        let minus = (1.0 + fi).max(0.0);
        unlabeled_hinge += plus.min(minus);
    }
    c * labeled_hinge + c_u * unlabeled_hinge + model.weight_norm_sq().sqrt()
}

/// Geometric annealing schedule from `c_u/100` up to exactly `c_u`.
fn anneal_schedule(c_u: f64) -> Vec<f64> {
    if c_u <= 0.0 {
        return vec![0.0];
    }
    let mut steps = Vec::new();
    let mut v = c_u / 100.0;
    while v < c_u {
        steps.push(v);
        v *= 2.0;
    }
    if steps.last() != Some(&c_u) {
        steps.push(c_u);
    }
    steps
}

/// Validates the shared binary-solver inputs.
fn check_inputs(n_l: usize, y_l: &[f64], c: f64, c_u: f64) -> Result<()> {
    if y_l.len() != n_l {
        return Err(Error::Config("tsvm: label/row mismatch".into()));
    }
    if !y_l.iter().any(|&y| y > 0.0) || !y_l.iter().any(|&y| y < 0.0) {
        return Err(Error::Config("tsvm: both classes required in labels".into()));
    }
    if !(c.is_finite() && c > 0.0) || !(c_u.is_finite() && c_u >= 0.0) {
        return Err(Error::Config("tsvm: need C > 0 and C_u >= 0".into()));
    }
    Ok(())
}

/// Stacks the labeled block above the unlabeled block and standardizes the
/// result on all rows together (the solver's feature space).
fn stack_standardized(x_labeled: &DMatrix<f64>, x_unlabeled: &DMatrix<f64>) -> DMatrix<f64> {
    let (n_l, n_u) = (x_labeled.nrows(), x_unlabeled.nrows());
    let mut x_all = DMatrix::zeros(n_l + n_u, x_labeled.ncols());
    for i in 0..n_l {
        x_all.row_mut(i).copy_from(&x_labeled.row(i));
    }
    for i in 0..n_u {
        x_all.row_mut(n_l + i).copy_from(&x_unlabeled.row(i));
    }
    let standardizer = Standardizer::fit(&x_all);
    standardizer.transform(&x_all)
}

/// Decision values of the purely supervised starting point: an SVM trained
/// on the labeled rows alone (unlabeled rows carry zero cost) in the same
/// stacked standardization the transductive solver uses, evaluated on every
/// row. With `c_u = 0` the transductive solve cannot improve on this model,
/// so [`tsvm_binary`] must reproduce these decisions.
pub fn supervised_decisions(
    x_labeled: &DMatrix<f64>,
    y_l: &[f64],
    x_unlabeled: &DMatrix<f64>,
    c: f64,
    kernel: Kernel,
) -> Result<Vec<f64>> {
    let n_l = x_labeled.nrows();
    let n_u = x_unlabeled.nrows();
    check_inputs(n_l, y_l, c, 0.0)?;
    let x_all = stack_standardized(x_labeled, x_unlabeled);
    let mut y_all: Vec<f64> = y_l.to_vec();
    y_all.extend(std::iter::repeat(1.0).take(n_u));
    let mut costs = vec![c; n_l];
    costs.extend(std::iter::repeat(0.0).take(n_u));
    let model = BinarySvm::train(&x_all, &y_all, &costs, kernel, DEFAULT_TOL)?;
    Ok(model.decision(&x_all))
}

/// Binary transductive SVM. `y_l` must contain both `+1` and `-1`.
/// Features are standardized internally on the stacked labeled and
/// unlabeled rows.
pub fn tsvm_binary(
    x_labeled: &DMatrix<f64>,
    y_l: &[f64],
    x_unlabeled: &DMatrix<f64>,
    c: f64,
    c_u: f64,
    kernel: Kernel,
) -> Result<TsvmBinary> {
    let n_l = x_labeled.nrows();
    let n_u = x_unlabeled.nrows();
    check_inputs(n_l, y_l, c, c_u)?;
    let x_all = stack_standardized(x_labeled, x_unlabeled);

    // Supervised initialization: unlabeled rows carry zero cost.
    let mut y_all: Vec<f64> = y_l.to_vec();
    y_all.extend(std::iter::repeat(1.0).take(n_u));
    let mut costs = vec![c; n_l];
    costs.extend(std::iter::repeat(0.0).take(n_u));
    let supervised = BinarySvm::train(&x_all, &y_all, &costs, kernel, DEFAULT_TOL)?;
    let f0 = supervised.decision(&x_all);
    for j in 0..n_u {
        y_all[n_l + j] = if f0[n_l + j] >= 0.0 { 1.0 } else { -1.0 };
    }

    let retrain = |y_all: &[f64], c_u_cur: f64| -> Result<BinarySvm> {
        let mut costs = vec![c; n_l];
        costs.extend(std::iter::repeat(c_u_cur).take(n_u));
        BinarySvm::train(&x_all, y_all, &costs, kernel, DEFAULT_TOL)
    };

    let mut model = supervised;
    let mut phases = Vec::new();
    let mut converged = true;
    let swap_budget = (4 * n_u).max(100);

    for c_u_cur in anneal_schedule(c_u) {
        model = retrain(&y_all, c_u_cur)?;
        let mut obj = objective(&model, &x_all, y_l, n_l, c, c_u_cur);
        let mut trace = PhaseTrace {
            c_u: c_u_cur,
            initial_objective: obj,
            accepted_objectives: Vec::new(),
        };
        loop {
            if trace.accepted_objectives.len() >= swap_budget {
                converged = false;
                break;
            }
            let f = model.decision(&x_all);
            // Candidate pairs: both currently violating their assigned
            // side, with combined slack over 2 (a swap can only help such
            // pairs), tried in order of decreasing combined slack.
            let slack: Vec<f64> = (0..n_u)
                .map(|j| (1.0 - y_all[n_l + j] * f[n_l + j]).max(0.0))
                .collect();
            let mut cands: Vec<(usize, usize)> = Vec::new();
            for i in 0..n_u {
                if y_all[n_l + i] > 0.0 && slack[i] > 0.0 {
                    for j in 0..n_u {
                        if y_all[n_l + j] < 0.0
                            && slack[j] > 0.0
                            && slack[i] + slack[j] > 2.0
                        {
                            cands.push((i, j));
                        }
                    }
                }
            }
            cands.sort_by(|&(ai, aj), &(bi, bj)| {
                let sa = slack[ai] + slack[aj];
                let sb = slack[bi] + slack[bj];
                sb.partial_cmp(&sa).unwrap().then(ai.cmp(&bi)).then(aj.cmp(&bj))
            });

            let mut accepted = false;
            for (i, j) in cands {
                y_all[n_l + i] = -1.0;
                y_all[n_l + j] = 1.0;
                let candidate = retrain(&y_all, c_u_cur)?;
                let cand_obj = objective(&candidate, &x_all, y_l, n_l, c, c_u_cur);
                if cand_obj < obj - IMPROVE_EPS {
                    model = candidate;
                    obj = cand_obj;
                    trace.accepted_objectives.push(obj);
                    accepted = true;
                    break;
                }
                y_all[n_l + i] = 1.0;
                y_all[n_l + j] = -1.0;
            }
            if !accepted {
                break;
            }
        }
        phases.push(trace);
        if !converged {
            break;
        }
    }

    Ok(TsvmBinary {
        decisions: model.decision(&x_all),
        pseudo_labels: y_all[n_l..].to_vec(),
        phases,
        converged,
    })
}

/// Multiclass transductive labeling. Two classes reduce to a single binary
/// solve (lower class code mapped to `+1`); more classes use one-vs-rest
/// with per-row argmax of the decision values, ties to the lowest code.
pub fn tsvm_multiclass(m: &MixedSet, c: f64, c_u: f64, kernel: Kernel) -> Result<TsvmLabels> {
    let n_l = m.n_labeled;
    let mut classes: Vec<i32> = m.y[..n_l].to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Config(
            "tsvm: need at least two labeled classes".into(),
        ));
    }
    let x_l = m.labeled_x();
    let x_u = m.unlabeled_x();
    let mut labels = m.y.clone();

    if classes.len() == 2 {
        let y_bin: Vec<f64> = m.y[..n_l]
            .iter()
            .map(|&y| if y == classes[0] { 1.0 } else { -1.0 })
            .collect();
        let out = tsvm_binary(&x_l, &y_bin, &x_u, c, c_u, kernel)?;
        for (j, &p) in out.pseudo_labels.iter().enumerate() {
            labels[n_l + j] = if p > 0.0 { classes[0] } else { classes[1] };
        }
        return Ok(TsvmLabels {
            labels,
            converged: out.converged,
        });
    }

    let mut converged = true;
    let mut decisions: Vec<Vec<f64>> = Vec::with_capacity(classes.len());
    for &cls in &classes {
        let y_bin: Vec<f64> = m.y[..n_l]
            .iter()
            .map(|&y| if y == cls { 1.0 } else { -1.0 })
            .collect();
        let out = tsvm_binary(&x_l, &y_bin, &x_u, c, c_u, kernel)?;
        converged &= out.converged;
        decisions.push(out.decisions);
    }
    for j in 0..m.n_unlabeled() {
        let row = n_l + j;
        let mut best = 0usize;
        for k in 1..classes.len() {
            if decisions[k][row] > decisions[best][row] {
                best = k;
            }
        }
        labels[row] = classes[best];
    }
    debug_assert!(labels.iter().all(|&y| y != UNLABELED));
    Ok(TsvmLabels { labels, converged })
}
