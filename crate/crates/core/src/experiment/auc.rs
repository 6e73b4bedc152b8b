//! One-vs-rest macro ROC-AUC and percentile aggregation.

use nalgebra::DMatrix;

use serde::{Deserialize, Serialize};

use crate::dataset::ResultRecord;
use crate::{Error, Result};

/// Macro OVR AUC plus how many classes contributed or were skipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AucDetail {
    /// Mean of the per-class binary AUCs over the scorable classes.
    pub value: f64,
    /// Classes that had at least one positive and a score column.
    pub classes_used: usize,
    /// Classes skipped for lack of positives or of a score column.
    pub classes_skipped: usize,
}

/// Binary AUC of one score column via the rank statistic, ties earning
/// half credit: `(sum of positive ranks - n_pos(n_pos+1)/2) / (n_pos n_neg)`
/// with average ranks over tied scores.
fn binary_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap().then(a.cmp(&b)));

    // Average rank (1-based) per sample, shared across ties.
    let mut rank = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            rank[idx] = avg;
        }
        i = j + 1;
    }

    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = n - n_pos;
    let rank_sum: f64 = (0..n).filter(|&i| positive[i]).map(|i| rank[i]).sum();
    (rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0) / (n_pos as f64 * n_neg as f64)
}

/// Macro one-vs-rest AUC of a class-score matrix against true labels.
/// `score_classes` names the class of each score column. Classes without a
/// positive sample (or without a score column) are skipped and counted;
/// a single-class label vector is an error.
pub fn roc_auc_ovr(
    scores: &DMatrix<f64>,
    score_classes: &[i32],
    y: &[i32],
) -> Result<AucDetail> {
    let n = y.len();
    if scores.nrows() != n {
        return Err(Error::Config(format!(
            "auc: {} score rows for {n} labels",
            scores.nrows()
        )));
    }
    if scores.ncols() != score_classes.len() {
        return Err(Error::Config(format!(
            "auc: {} score columns for {} class names",
            scores.ncols(),
            score_classes.len()
        )));
    }
    let mut present: Vec<i32> = y.to_vec();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::Numeric(
            "auc: validation labels contain a single class".into(),
        ));
    }

    let mut sum = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for &cls in &present {
        let col = match score_classes.iter().position(|&c| c == cls) {
            Some(col) => col,
            None => {
                skipped += 1;
                continue;
            }
        };
        let positive: Vec<bool> = y.iter().map(|&v| v == cls).collect();
        let n_pos = positive.iter().filter(|&&p| p).count();
        if n_pos == 0 || n_pos == n {
            skipped += 1;
            continue;
        }
        let column: Vec<f64> = (0..n).map(|i| scores[(i, col)]).collect();
        sum += binary_auc(&column, &positive);
        used += 1;
    }
    if used == 0 {
        return Err(Error::Numeric(
            "auc: no class had both positives and a score column".into(),
        ));
    }
    Ok(AucDetail {
        value: sum / used as f64,
        classes_used: used,
        classes_skipped: skipped,
    })
}

/// Aggregated AUC statistics of one (engine, classifier, step) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    /// Engine name.
    pub engine: String,
    /// Classifier name.
    pub classifier: String,
    /// Step index.
    pub s: usize,
    /// Selected-unlabeled count at the step (the largest across folds,
    /// whose pools can differ by one).
    #[serde(rename = "n_U_s")]
    pub n_u_s: usize,
    /// Mean AUC over the group's cells.
    pub mean_auc: f64,
    /// 5th percentile (linear interpolation).
    pub p5_auc: f64,
    /// 95th percentile (linear interpolation).
    pub p95_auc: f64,
    /// Cells aggregated.
    pub n_cells: usize,
}

/// Empirical percentile with linear interpolation between order statistics
/// (the same convention as `numpy.percentile`'s default): on sorted values,
/// rank `h = (n - 1) p` interpolates between `floor(h)` and `ceil(h)`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&p));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Groups results by (engine, classifier, s), pooling every (k, q, r) cell,
/// and computes mean / 5th / 95th percentile AUC per group. Rows come back
/// sorted by (engine, classifier, s).
pub fn aggregate(results: &[ResultRecord]) -> Vec<AggregateRow> {
    use std::collections::BTreeMap;

    let mut groups: BTreeMap<(String, String, usize), (Vec<f64>, usize)> = BTreeMap::new();
    for rec in results {
        let entry = groups
            .entry((rec.engine.clone(), rec.classifier.clone(), rec.s))
            .or_default();
        entry.0.push(rec.auc);
        entry.1 = entry.1.max(rec.n_u_s);
    }
    groups
        .into_iter()
        .map(|((engine, classifier, s), (mut aucs, n_u_s))| {
            aucs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
            AggregateRow {
                engine,
                classifier,
                s,
                n_u_s,
                mean_auc: mean,
                p5_auc: percentile(&aucs, 0.05),
                p95_auc: percentile(&aucs, 0.95),
                n_cells: aucs.len(),
            }
        })
        .collect()
}
