//! The fold / labeled-split / step-growth robustness protocol.
//!
//! A run partitions the feature table into `n_K` folds; inside each fold's
//! training part it draws `n_Q` class-balanced labeled splits of size `n_L`;
//! for each split it grows the unlabeled budget in `delta_U` increments over
//! `n_S` steps (`n_R` independent reselections per nonzero step, one
//! supervised-only evaluation at step 0); every (engine, classifier) combo
//! pseudo-labels the selected pool, refits the final classifier on labeled
//! plus pseudo-labeled rows, and is scored by macro one-vs-rest ROC-AUC on
//! the held-out validation fold.
//!
//! All randomness derives from the master seed through per-purpose tags, so
//! results do not depend on thread count or scheduling; the same (fold,
//! split, step, repeat) cell selects the same unlabeled rows under every
//! engine, keeping comparisons paired.

mod auc;
mod io;

pub use auc::{aggregate, percentile, roc_auc_ovr, AggregateRow, AucDetail};
pub use io::{
    read_aggregates, read_failures, read_results, write_aggregates, write_failures,
    write_results, write_timings, FailureRecord,
};

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::classify::{
    enumerate_grid, fit, grid_search, select_rows, stratified_folds, ClassifierKind,
    ClassifierSpec, Kernel,
};
use crate::dataset::{
    EngineKind, ExperimentPlan, FeatureDataset, ResultRecord, UNLABELED,
};
use crate::seed::{derive_seed, rng_from};
use crate::ssl::spreading::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::ssl::{
    label_spreading_engine, proximity_order, self_train, tsvm_multiclass, MixedSet,
};
use crate::{Error, Result};

/// Seed-derivation tag for the fold shuffle.
const SEED_FOLDS: u64 = 1;
/// Seed-derivation tag for labeled splits (followed by fold and split index).
const SEED_SPLIT: u64 = 2;
/// Seed-derivation tag for unlabeled selection (followed by fold, split,
/// step and repeat indices). Engine-independent on purpose.
const SEED_SELECT: u64 = 3;

/// Folds used for every labeled-set cross-validation during freezing.
const TUNE_FOLDS: usize = 3;

/// Sample counts implied by the protocol parameters. The quoted values use
/// the largest validation fold (so `n_t`, `n_u` are the smallest training
/// and unlabeled pools); folds whose pool is one larger simply cap at their
/// own size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolSizes {
    /// Total events.
    pub n_d: usize,
    /// Validation-fold size (the largest fold).
    pub n_v: usize,
    /// Training-pool size per fold (`n_d - n_v`).
    pub n_t: usize,
    /// Unlabeled-pool size per split (`n_t - n_l`).
    pub n_u: usize,
    /// Number of budget steps including step 0.
    pub n_s: usize,
    /// Budget increment per step.
    pub delta_u: usize,
}

impl ProtocolSizes {
    /// Unlabeled samples requested at step `s` (before capping at a fold's
    /// actual pool size): `min(s * delta_U, n_U)`.
    pub fn step_size(&self, s: usize) -> usize {
        (s * self.delta_u).min(self.n_u)
    }
}

/// Computes the protocol arithmetic: `n_V = ceil(n_D / n_K)`,
/// `n_T = n_D - n_V`, `n_U = n_T - n_L`, and
/// `n_S = ceil(n_U / delta_U) + 1` steps counting step 0.
pub fn protocol_sizes(
    n_d: usize,
    n_k: usize,
    n_l: usize,
    delta_u: usize,
) -> Result<ProtocolSizes> {
    if n_k < 2 {
        return Err(Error::Config(format!("n_K must be >= 2, got {n_k}")));
    }
    if n_d < n_k {
        return Err(Error::Config(format!(
            "{n_d} events cannot fill n_K = {n_k} folds"
        )));
    }
    if delta_u == 0 {
        return Err(Error::Config("delta_U must be >= 1".into()));
    }
    let n_v = (n_d + n_k - 1) / n_k;
    let n_t = n_d - n_v;
    if n_l >= n_t {
        return Err(Error::Config(format!(
            "n_L = {n_l} must be smaller than the training pool n_T = {n_t}"
        )));
    }
    let n_u = n_t - n_l;
    let n_s = (n_u + delta_u - 1) / delta_u + 1;
    Ok(ProtocolSizes {
        n_d,
        n_v,
        n_t,
        n_u,
        n_s,
        delta_u,
    })
}

/// Shuffles `0..n_d` once and cuts the result into `n_k` contiguous folds;
/// the first `n_d mod n_k` folds are one element larger.
pub fn make_folds(n_d: usize, n_k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if n_k < 2 || n_d < n_k {
        return Err(Error::Config(format!(
            "cannot cut {n_d} events into {n_k} folds"
        )));
    }
    let mut ids: Vec<usize> = (0..n_d).collect();
    ids.shuffle(&mut rng_from(seed));
    let base = n_d / n_k;
    let extra = n_d % n_k;
    let mut folds = Vec::with_capacity(n_k);
    let mut start = 0usize;
    for k in 0..n_k {
        let len = base + usize::from(k < extra);
        folds.push(ids[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

/// A labeled/unlabeled partition of one fold's training ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSplit {
    /// Labeled event ids, ascending.
    pub labeled: Vec<usize>,
    /// The remaining training ids, in training-pool order.
    pub unlabeled: Vec<usize>,
}

/// Draws `n_l` labeled events from the training ids by rejection sampling
/// until every class present in the pool holds between `ceil(b_min * n_l)`
/// and `floor(b_max * n_l)` labeled events (bounds nudged by 1e-9 against
/// float dust). Infeasible bounds fail fast with an analytic check.
pub fn make_label_split(
    i_t: &[usize],
    y: &[i32],
    n_l: usize,
    b_min: f64,
    b_max: f64,
    seed: u64,
    max_tries: usize,
) -> Result<LabelSplit> {
    if n_l == 0 || n_l >= i_t.len() {
        return Err(Error::Config(format!(
            "n_L = {n_l} must lie in 1..{} (the training-pool size)",
            i_t.len()
        )));
    }
    let mut avail: BTreeMap<i32, usize> = BTreeMap::new();
    for &i in i_t {
        if y[i] == UNLABELED {
            return Err(Error::Config(
                "training pool contains an unlabeled event; the protocol needs ground truth"
                    .into(),
            ));
        }
        *avail.entry(y[i]).or_default() += 1;
    }
    let n_classes = avail.len();
    if n_classes < 2 {
        return Err(Error::Config(
            "training pool holds a single class; no balanced split exists".into(),
        ));
    }
    let lo = (b_min * n_l as f64 - 1e-9).ceil().max(0.0) as usize;
    let hi = (b_max * n_l as f64 + 1e-9).floor() as usize;
    if n_classes * lo > n_l || n_classes * hi < n_l {
        return Err(Error::Config(format!(
            "balance bounds ({b_min}, {b_max}) are infeasible: {n_l} labeled events over \
             {n_classes} classes with {lo}..={hi} per class; adjust n_L or the bounds"
        )));
    }
    for (&cls, &have) in &avail {
        if have < lo {
            return Err(Error::Config(format!(
                "class {cls} has only {have} training events, below the per-class \
                 lower bound {lo}; lower B_min or n_L"
            )));
        }
    }

    let mut rng = rng_from(seed);
    let mut pool: Vec<usize> = i_t.to_vec();
    for _ in 0..max_tries {
        // Partial Fisher-Yates: the first n_l entries become a uniform
        // sample without replacement.
        for i in 0..n_l {
            let j = rng.gen_range(i..pool.len());
            pool.swap(i, j);
        }
        let mut counts: BTreeMap<i32, usize> = BTreeMap::new();
        for &i in &pool[..n_l] {
            *counts.entry(y[i]).or_default() += 1;
        }
        let balanced = avail.keys().all(|cls| {
            let c = counts.get(cls).copied().unwrap_or(0);
            (lo..=hi).contains(&c)
        });
        if balanced {
            let mut labeled = pool[..n_l].to_vec();
            labeled.sort_unstable();
            let chosen: HashSet<usize> = labeled.iter().copied().collect();
            let unlabeled: Vec<usize> =
                i_t.iter().copied().filter(|i| !chosen.contains(i)).collect();
            return Ok(LabelSplit { labeled, unlabeled });
        }
    }
    Err(Error::Config(format!(
        "no labeled split satisfied the balance bounds ({b_min}, {b_max}) in {max_tries} \
         tries; loosen the bounds, change n_L, or raise max_split_tries"
    )))
}

/// Uniformly samples `n_take` ids from the unlabeled pool without
/// replacement, preserving the pool's order among the chosen ids. Requests
/// beyond the pool size return the whole pool.
pub fn select_unlabeled_step(pool: &[usize], n_take: usize, seed: u64) -> Vec<usize> {
    let n_take = n_take.min(pool.len());
    if n_take == 0 {
        return Vec::new();
    }
    let mut rng = rng_from(seed);
    let mut positions: Vec<usize> = (0..pool.len()).collect();
    for i in 0..n_take {
        let j = rng.gen_range(i..positions.len());
        positions.swap(i, j);
    }
    let mut chosen = positions[..n_take].to_vec();
    chosen.sort_unstable();
    chosen.into_iter().map(|p| pool[p]).collect()
}

/// Hyperparameters frozen per (fold, split) on the labeled set alone.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenParams {
    /// Winning final-classifier spec per kind (self-training reuses the
    /// spec of its final classifier as the base learner).
    pub f2: BTreeMap<ClassifierKind, ClassifierSpec>,
    /// Label-spreading `(alpha, sigma_scale)`, when that engine is scheduled.
    pub ls: Option<(f64, f64)>,
    /// Transductive-SVM soft-margin cost, when that engine is scheduled.
    pub tsvm_c: Option<f64>,
}

/// Counts labeled-set holdout hits of one engine configuration: each
/// stratified fold of the labeled set is hidden as the unlabeled block, the
/// engine labels it, and recovered labels are compared with the hidden
/// truth. Folds the engine fails on contribute zero hits.
fn transductive_cv_correct(
    x_l: &DMatrix<f64>,
    y_l: &[i32],
    run: &dyn Fn(&MixedSet) -> Result<Vec<i32>>,
) -> usize {
    let assignment = stratified_folds(y_l, TUNE_FOLDS);
    let n_folds = assignment.iter().copied().max().unwrap_or(0) + 1;
    let mut correct = 0usize;
    for fold in 0..n_folds {
        let train: Vec<usize> = (0..y_l.len()).filter(|i| assignment[*i] != fold).collect();
        let held: Vec<usize> = (0..y_l.len()).filter(|i| assignment[*i] == fold).collect();
        if held.is_empty() || train.is_empty() {
            continue;
        }
        let xt = select_rows(x_l, &train);
        let yt: Vec<i32> = train.iter().map(|&i| y_l[i]).collect();
        let xh = select_rows(x_l, &held);
        let Ok(m) = MixedSet::assemble(&xt, &yt, &xh) else {
            continue;
        };
        let Ok(labels) = run(&m) else {
            continue;
        };
        for (slot, &src) in m.unlabeled_order.iter().enumerate() {
            if labels[m.n_labeled + slot] == y_l[held[src]] {
                correct += 1;
            }
        }
    }
    correct
}

/// Freezes every hyperparameter the plan's combos need, using only the
/// labeled split: classifier grids by supervised stratified CV accuracy,
/// engine grids by transductive CV (ties keep the earliest grid point).
pub fn freeze_params(
    plan: &ExperimentPlan,
    x_l: &DMatrix<f64>,
    y_l: &[i32],
) -> Result<FrozenParams> {
    let combos = plan.combos();
    let kinds: BTreeSet<ClassifierKind> = combos.iter().map(|&(_, c)| c).collect();
    let engines: BTreeSet<EngineKind> = combos.iter().map(|&(e, _)| e).collect();

    let mut f2 = BTreeMap::new();
    for &kind in &kinds {
        let (spec, _) = grid_search(kind, &plan.grid_for(kind.name()), x_l, y_l, TUNE_FOLDS)?;
        f2.insert(kind, spec);
    }

    let ls = if engines.contains(&EngineKind::LabelSpreading) {
        let points = enumerate_grid(&plan.grid_for("label_spreading"));
        let mut best: Option<((f64, f64), usize)> = None;
        for point in &points {
            let alpha = point.get("alpha").copied().unwrap_or(0.2);
            let scale = point.get("sigma_scale").copied().unwrap_or(1.0);
            let correct = transductive_cv_correct(x_l, y_l, &|m| {
                label_spreading_engine(m, alpha, scale, DEFAULT_TOL, DEFAULT_MAX_ITER)
                    .map(|r| r.labels)
            });
            if best.as_ref().map_or(true, |&(_, c)| correct > c) {
                best = Some(((alpha, scale), correct));
            }
        }
        Some(
            best.ok_or_else(|| Error::Config("label_spreading grid is empty".into()))?
                .0,
        )
    } else {
        None
    };

    let tsvm_c = if engines.contains(&EngineKind::Tsvm) {
        let points = enumerate_grid(&plan.grid_for("tsvm"));
        let mut best: Option<(f64, usize)> = None;
        for point in &points {
            let c = point.get("C").copied().unwrap_or(1.0);
            let correct = transductive_cv_correct(x_l, y_l, &|m| {
                tsvm_multiclass(m, c, c, Kernel::Linear).map(|r| r.labels)
            });
            if best.map_or(true, |(_, bc)| correct > bc) {
                best = Some((c, correct));
            }
        }
        Some(
            best.ok_or_else(|| Error::Config("tsvm grid is empty".into()))?
                .0,
        )
    } else {
        None
    };

    Ok(FrozenParams { f2, ls, tsvm_c })
}

/// Runs one cell: pseudo-label the selected unlabeled rows (none at step 0),
/// fit the final classifier on labeled + pseudo-labeled rows, and score
/// macro OVR ROC-AUC on the validation ids. Returns `(auc, converged)`.
#[allow(clippy::too_many_arguments)]
fn run_cell(
    x: &DMatrix<f64>,
    y: &[i32],
    labeled: &[usize],
    selected: &[usize],
    validation: &[usize],
    engine: EngineKind,
    f2: &ClassifierSpec,
    frozen: &FrozenParams,
    self_train_batch: usize,
) -> Result<(f64, bool)> {
    let x_l = select_rows(x, labeled);
    let y_l: Vec<i32> = labeled.iter().map(|&i| y[i]).collect();
    let (train_x, train_y, converged) = if selected.is_empty() {
        // Step 0: supervised baseline, identical for every engine.
        (x_l, y_l, true)
    } else {
        let x_u = select_rows(x, selected);
        let m = MixedSet::assemble(&x_l, &y_l, &x_u)?;
        let (labels, converged) = match engine {
            EngineKind::SelfTraining => (self_train(f2, &m, self_train_batch)?, true),
            EngineKind::Tsvm => {
                let c = frozen
                    .tsvm_c
                    .ok_or_else(|| Error::Config("tsvm cost was not frozen".into()))?;
                let out = tsvm_multiclass(&m, c, c, Kernel::Linear)?;
                (out.labels, out.converged)
            }
            EngineKind::LabelSpreading => {
                let (alpha, scale) = frozen
                    .ls
                    .ok_or_else(|| Error::Config("label_spreading params were not frozen".into()))?;
                let out = label_spreading_engine(&m, alpha, scale, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
                (out.labels, out.converged)
            }
        };
        (m.x, labels, converged)
    };
    let model = fit(f2, &train_x, &train_y)?;
    let x_v = select_rows(x, validation);
    let y_v: Vec<i32> = validation.iter().map(|&i| y[i]).collect();
    let scores = model.score(&x_v)?;
    let detail = roc_auc_ovr(&scores, model.classes(), &y_v)?;
    Ok((detail.value, converged))
}

/// Everything a protocol run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// One row per successfully scored cell, canonically sorted. Includes
    /// rows carried over from `existing` on a resumed run.
    pub results: Vec<ResultRecord>,
    /// Cells whose engine or classifier failed, canonically sorted.
    pub failures: Vec<FailureRecord>,
    /// The protocol arithmetic for this dataset and plan.
    pub sizes: ProtocolSizes,
}

/// Runs the whole protocol over a fully labeled feature table.
///
/// `existing` rows (e.g. read back from an interrupted run's results file)
/// are trusted by cell key and not recomputed. `progress` is called after
/// each completed (fold, split) block with (done, total) block counts.
pub fn run_plan(
    features: &FeatureDataset,
    plan: &ExperimentPlan,
    existing: &[ResultRecord],
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<RunOutput> {
    plan.validate()?;
    plan.validate_with_data(features.len())?;
    if features.labels.iter().any(|&l| l == UNLABELED) {
        return Err(Error::Config(
            "every event must carry a ground-truth label to run the protocol".into(),
        ));
    }
    let sizes = protocol_sizes(features.len(), plan.n_k, plan.n_l, plan.delta_u)?;
    let folds = make_folds(
        features.len(),
        plan.n_k,
        derive_seed(plan.master_seed, &[SEED_FOLDS]),
    )?;
    let combos = plan.combos();

    let existing_keys: HashSet<_> = existing.iter().map(ResultRecord::key).collect();

    let blocks: Vec<(usize, usize)> = (0..plan.n_k)
        .flat_map(|k| (0..plan.n_q).map(move |q| (k, q)))
        .collect();
    let done_blocks = AtomicUsize::new(0);

    let per_block: Vec<(Vec<ResultRecord>, Vec<FailureRecord>)> = blocks
        .par_iter()
        .map(|&(k, q)| -> Result<(Vec<ResultRecord>, Vec<FailureRecord>)> {
            let out = run_block(
                features, plan, &sizes, &folds, &combos, &existing_keys, k, q,
            )?;
            let done = done_blocks.fetch_add(1, Ordering::Relaxed) + 1;
            progress(done, blocks.len());
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut results: Vec<ResultRecord> = existing.to_vec();
    let mut failures: Vec<FailureRecord> = Vec::new();
    for (res, fail) in per_block {
        results.extend(res);
        failures.extend(fail);
    }
    results.sort_by_key(ResultRecord::key);
    failures.sort_by_key(FailureRecord::key);
    Ok(RunOutput {
        results,
        failures,
        sizes,
    })
}

/// Runs all cells of one (fold, split) block.
#[allow(clippy::too_many_arguments)]
fn run_block(
    features: &FeatureDataset,
    plan: &ExperimentPlan,
    sizes: &ProtocolSizes,
    folds: &[Vec<usize>],
    combos: &[(EngineKind, ClassifierKind)],
    existing_keys: &HashSet<(String, String, usize, usize, usize, usize)>,
    k: usize,
    q: usize,
) -> Result<(Vec<ResultRecord>, Vec<FailureRecord>)> {
    // Cells of this block, skipping any already present in the resume data.
    let mut cells: Vec<(EngineKind, ClassifierKind, usize, usize)> = Vec::new();
    for &(engine, classifier) in combos {
        for s in 0..sizes.n_s {
            let reps = if s == 0 { 1 } else { plan.n_r };
            for r in 0..reps {
                let key = (
                    engine.name().to_string(),
                    classifier.name().to_string(),
                    k,
                    q,
                    s,
                    r,
                );
                if !existing_keys.contains(&key) {
                    cells.push((engine, classifier, s, r));
                }
            }
        }
    }
    if cells.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }

    let i_v = &folds[k];
    let i_t: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|&(idx, _)| idx != k)
        .flat_map(|(_, fold)| fold.iter().copied())
        .collect();
    let split = make_label_split(
        &i_t,
        &features.labels,
        plan.n_l,
        plan.b_min,
        plan.b_max,
        derive_seed(plan.master_seed, &[SEED_SPLIT, k as u64, q as u64]),
        plan.max_split_tries,
    )?;

    let x_l = select_rows(&features.x, &split.labeled);
    let y_l: Vec<i32> = split.labeled.iter().map(|&i| features.labels[i]).collect();
    let frozen = freeze_params(plan, &x_l, &y_l)?;

    // Canonical unlabeled pool: the split's leftovers in proximity order.
    let x_pool = select_rows(&features.x, &split.unlabeled);
    let order = proximity_order(&x_l, &x_pool);
    let pool: Vec<usize> = order.iter().map(|&p| split.unlabeled[p]).collect();

    // A capped step selects the whole pool no matter which reselection seed
    // is drawn, so one evaluation per (engine, classifier, s) serves every r
    // there; the remaining reselections copy its outcome.
    let mut unique: Vec<(EngineKind, ClassifierKind, usize, usize)> = Vec::new();
    let mut copies: Vec<(usize, usize)> = Vec::new();
    let mut rep_of: BTreeMap<(EngineKind, ClassifierKind, usize), usize> = BTreeMap::new();
    for &(engine, classifier, s, r) in &cells {
        if s * plan.delta_u >= pool.len() {
            match rep_of.entry((engine, classifier, s)) {
                std::collections::btree_map::Entry::Occupied(rep) => {
                    copies.push((*rep.get(), r));
                    continue;
                }
                std::collections::btree_map::Entry::Vacant(slot) => {
                    slot.insert(unique.len());
                }
            }
        }
        unique.push((engine, classifier, s, r));
    }

    let outcomes: Vec<std::result::Result<ResultRecord, FailureRecord>> = unique
        .par_iter()
        .map(|&(engine, classifier, s, r)| {
            let n_take = (s * plan.delta_u).min(pool.len());
            let selected = select_unlabeled_step(
                &pool,
                n_take,
                derive_seed(
                    plan.master_seed,
                    &[SEED_SELECT, k as u64, q as u64, s as u64, r as u64],
                ),
            );
            let started = Instant::now();
            let f2 = &frozen.f2[&classifier];
            match run_cell(
                &features.x,
                &features.labels,
                &split.labeled,
                &selected,
                i_v,
                engine,
                f2,
                &frozen,
                plan.self_train_batch(),
            ) {
                Ok((auc, converged)) => Ok(ResultRecord {
                    engine: engine.name().to_string(),
                    classifier: classifier.name().to_string(),
                    k,
                    q,
                    s,
                    r,
                    n_u_s: selected.len(),
                    auc,
                    converged,
                    wall_ms: started.elapsed().as_millis() as u64,
                }),
                Err(e) => Err(FailureRecord {
                    engine: engine.name().to_string(),
                    classifier: classifier.name().to_string(),
                    k,
                    q,
                    s,
                    r,
                    error: e.to_string(),
                }),
            }
        })
        .collect();

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (rep, r) in copies {
        match &outcomes[rep] {
            Ok(rec) => results.push(ResultRecord {
                r,
                ..rec.clone()
            }),
            Err(fail) => failures.push(FailureRecord {
                r,
                ..fail.clone()
            }),
        }
    }
    for outcome in outcomes {
        match outcome {
            Ok(rec) => results.push(rec),
            Err(fail) => failures.push(fail),
        }
    }
    Ok((results, failures))
}
