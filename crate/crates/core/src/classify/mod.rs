//! Small from-scratch base classifiers behind a single train/predict/score
//! façade: k-nearest-neighbors, a Gini decision tree, multinomial gradient
//! boosting over depth-limited regression trees, and linear/RBF SVMs trained
//! by SMO-style dual coordinate optimization (one-vs-rest for multiclass).
//!
//! Every model standardizes features internally: the standardizer is fit on
//! the training rows only and applied identically at predict/score time.
//! All fits are deterministic — tree split ties break on the lowest feature
//! index and then the lowest threshold, SMO scans indices in order, and no
//! classifier draws random numbers.

mod gboost;
mod knn;
mod svm;
mod tree;

pub use svm::Kernel;
pub(crate) use svm::{BinarySvm, DEFAULT_TOL as SVM_DEFAULT_TOL};

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::{Grid, UNLABELED};
use crate::{Error, Result};

/// Classifier families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    /// k-nearest neighbors.
    #[serde(rename = "kNN")]
    Knn,
    /// Decision tree (Gini).
    #[serde(rename = "DT")]
    Dt,
    /// Gradient boosting (multinomial, regression trees).
    #[serde(rename = "GB")]
    Gb,
    /// Linear-kernel SVM.
    #[serde(rename = "SVML")]
    Svml,
    /// RBF-kernel SVM.
    #[serde(rename = "SVMR")]
    Svmr,
}

impl ClassifierKind {
    /// All kinds, in the order used by config files and reports.
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::Knn,
        ClassifierKind::Dt,
        ClassifierKind::Gb,
        ClassifierKind::Svml,
        ClassifierKind::Svmr,
    ];

    /// Name used in config files and result rows.
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "kNN",
            ClassifierKind::Dt => "DT",
            ClassifierKind::Gb => "GB",
            ClassifierKind::Svml => "SVML",
            ClassifierKind::Svmr => "SVMR",
        }
    }
}

/// A classifier kind plus its hyperparameters. Fields that do not apply to
/// the kind are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierSpec {
    /// Which family to train.
    pub kind: ClassifierKind,
    /// Neighbor count (kNN).
    pub k: usize,
    /// Depth limit (DT and GB trees).
    pub max_depth: usize,
    /// Minimum samples per leaf (DT and GB trees).
    pub min_leaf: usize,
    /// Boosting rounds (GB).
    pub n_trees: usize,
    /// Shrinkage (GB).
    pub learning_rate: f64,
    /// Soft-margin cost (SVML/SVMR).
    pub c: f64,
    /// RBF width (SVMR); this is the absolute value used in the kernel.
    pub gamma: f64,
}

impl ClassifierSpec {
    /// Baseline parameters, overridden per kind by the constructors below.
    fn base(kind: ClassifierKind) -> ClassifierSpec {
        ClassifierSpec {
            kind,
            k: 5,
            max_depth: 5,
            min_leaf: 1,
            n_trees: 100,
            learning_rate: 0.1,
            c: 1.0,
            gamma: 0.1,
        }
    }

    /// k-nearest-neighbors with `k` neighbors.
    pub fn knn(k: usize) -> ClassifierSpec {
        ClassifierSpec {
            k,
            ..Self::base(ClassifierKind::Knn)
        }
    }

    /// Decision tree with the given depth limit.
    pub fn dt(max_depth: usize) -> ClassifierSpec {
        ClassifierSpec {
            max_depth,
            ..Self::base(ClassifierKind::Dt)
        }
    }

    /// Gradient boosting with `n_trees` rounds of depth-`max_depth` trees.
    pub fn gb(n_trees: usize, learning_rate: f64, max_depth: usize) -> ClassifierSpec {
        ClassifierSpec {
            n_trees,
            learning_rate,
            max_depth,
            ..Self::base(ClassifierKind::Gb)
        }
    }

    /// Linear SVM with cost `c`.
    pub fn svml(c: f64) -> ClassifierSpec {
        ClassifierSpec {
            c,
            ..Self::base(ClassifierKind::Svml)
        }
    }

    /// RBF SVM with cost `c` and kernel width `gamma`.
    pub fn svmr(c: f64, gamma: f64) -> ClassifierSpec {
        ClassifierSpec {
            c,
            gamma,
            ..Self::base(ClassifierKind::Svmr)
        }
    }

    /// Builds a spec from one grid point. RBF `gamma` grid values are
    /// dimension-free and divided by the feature count `d` here.
    pub fn from_grid_point(
        kind: ClassifierKind,
        point: &BTreeMap<String, f64>,
        d: usize,
    ) -> Result<ClassifierSpec> {
        let mut spec = Self::base(kind);
        for (key, &value) in point {
            match key.as_str() {
                "k" => spec.k = as_positive_int(key, value)?,
                "max_depth" => spec.max_depth = as_positive_int(key, value)?,
                "min_leaf" => spec.min_leaf = as_positive_int(key, value)?,
                "n_trees" => spec.n_trees = as_nonnegative_int(key, value)?,
                "learning_rate" => spec.learning_rate = value,
                "C" => spec.c = value,
                "gamma" => spec.gamma = value / d.max(1) as f64,
                other => {
                    return Err(Error::Config(format!(
                        "unknown hyperparameter {other:?} for {}",
                        kind.name()
                    )))
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Checks ranges of the parameters relevant to `kind`.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match self.kind {
            ClassifierKind::Knn if self.k == 0 => bad("kNN: k must be >= 1".into()),
            ClassifierKind::Dt | ClassifierKind::Gb if self.max_depth == 0 => {
                bad("tree depth must be >= 1".into())
            }
            ClassifierKind::Gb if !(self.learning_rate > 0.0) => {
                bad(format!("GB: learning rate must be > 0, got {}", self.learning_rate))
            }
            ClassifierKind::Svml | ClassifierKind::Svmr if !(self.c > 0.0) => {
                bad(format!("SVM: C must be > 0, got {}", self.c))
            }
            ClassifierKind::Svmr if !(self.gamma > 0.0) => {
                bad(format!("SVMR: gamma must be > 0, got {}", self.gamma))
            }
            _ => Ok(()),
        }
    }
}

fn as_positive_int(key: &str, value: f64) -> Result<usize> {
    let n = as_nonnegative_int(key, value)?;
    if n == 0 {
        return Err(Error::Config(format!("{key} must be >= 1")));
    }
    Ok(n)
}

fn as_nonnegative_int(key: &str, value: f64) -> Result<usize> {
    if !(value.is_finite() && value >= 0.0 && value.fract() == 0.0) {
        return Err(Error::Config(format!(
            "{key} must be a non-negative integer, got {value}"
        )));
    }
    Ok(value as usize)
}

/// Per-feature z-scoring fit on training data only. Constant features keep
/// scale 1 so they pass through unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    /// Per-feature means.
    pub mean: Vec<f64>,
    /// Per-feature scales (standard deviation, or 1 for constant features).
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Fits means and scales on the rows of `x`.
    pub fn fit(x: &DMatrix<f64>) -> Standardizer {
        let n = x.nrows().max(1) as f64;
        let d = x.ncols();
        let mut mean = vec![0.0; d];
        let mut scale = vec![0.0; d];
        for j in 0..d {
            let col = x.column(j);
            let mu = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
            mean[j] = mu;
            let sd = var.sqrt();
            scale[j] = if sd > 0.0 { sd } else { 1.0 };
        }
        Standardizer { mean, scale }
    }

    /// Applies `(x - mean) / scale` column-wise.
    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        for j in 0..x.ncols() {
            for i in 0..x.nrows() {
                out[(i, j)] = (out[(i, j)] - self.mean[j]) / self.scale[j];
            }
        }
        out
    }

    /// Inverse of [`Standardizer::transform`].
    pub fn inverse_transform(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = z.clone();
        for j in 0..z.ncols() {
            for i in 0..z.nrows() {
                out[(i, j)] = out[(i, j)] * self.scale[j] + self.mean[j];
            }
        }
        out
    }
}

enum ModelInner {
    Knn(knn::KnnModel),
    Dt(tree::DecisionTree),
    Gb(gboost::GbModel),
    /// One binary machine per class, in `classes` order.
    Svm(Vec<svm::BinarySvm>),
}

/// A fitted classifier: the spec, the class codes seen at fit time (sorted
/// ascending), the fitted standardizer, and the family-specific state.
pub struct TrainedModel {
    spec: ClassifierSpec,
    classes: Vec<i32>,
    standardizer: Standardizer,
    inner: ModelInner,
}

/// Fits `spec` on labeled rows. Requires at least two distinct classes, no
/// unlabeled sentinel among `y`, and finite features.
pub fn fit(spec: &ClassifierSpec, x: &DMatrix<f64>, y: &[i32]) -> Result<TrainedModel> {
    spec.validate()?;
    if x.nrows() != y.len() {
        return Err(Error::Config(format!(
            "fit: {} feature rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if x.nrows() == 0 {
        return Err(Error::Config("fit: empty training set".into()));
    }
    if y.iter().any(|&l| l == UNLABELED) {
        return Err(Error::Config(
            "fit: training labels contain the unlabeled sentinel".into(),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("fit: non-finite feature value".into()));
    }
    let mut classes: Vec<i32> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Config(
            "fit: training set contains a single class".into(),
        ));
    }
    // Class indices into `classes`, used by all family implementations.
    let yi: Vec<usize> = y
        .iter()
        .map(|l| classes.binary_search(l).expect("label in class list"))
        .collect();

    let standardizer = Standardizer::fit(x);
    let z = standardizer.transform(x);

    let inner = match spec.kind {
        ClassifierKind::Knn => ModelInner::Knn(knn::KnnModel::fit(&z, &yi, classes.len())),
        ClassifierKind::Dt => ModelInner::Dt(tree::DecisionTree::fit(
            &z,
            &yi,
            classes.len(),
            spec.max_depth,
            spec.min_leaf,
        )),
        ClassifierKind::Gb => ModelInner::Gb(gboost::GbModel::fit(
            &z,
            &yi,
            classes.len(),
            spec.n_trees,
            spec.learning_rate,
            spec.max_depth,
            spec.min_leaf,
        )),
        ClassifierKind::Svml | ClassifierKind::Svmr => {
            let kernel = match spec.kind {
                ClassifierKind::Svml => Kernel::Linear,
                _ => Kernel::Rbf { gamma: spec.gamma },
            };
            let machines = classes
                .iter()
                .map(|&cls| {
                    let target: Vec<f64> = y
                        .iter()
                        .map(|&l| if l == cls { 1.0 } else { -1.0 })
                        .collect();
                    let costs = vec![spec.c; y.len()];
                    svm::BinarySvm::train(&z, &target, &costs, kernel, svm::DEFAULT_TOL)
                })
                .collect::<Result<Vec<_>>>()?;
            ModelInner::Svm(machines)
        }
    };

    Ok(TrainedModel {
        spec: spec.clone(),
        classes,
        standardizer,
        inner,
    })
}

impl TrainedModel {
    /// Class codes seen at fit time, ascending; score columns use this order.
    pub fn classes(&self) -> &[i32] {
        &self.classes
    }

    /// The spec the model was fit with.
    pub fn spec(&self) -> &ClassifierSpec {
        &self.spec
    }

    /// Per-class scores for each row of `x`: neighbor vote fractions (kNN),
    /// class probabilities (DT, GB), or signed one-vs-rest margins (SVM).
    /// Higher always means "more like this class".
    pub fn score(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.standardizer.mean.len() {
            return Err(Error::Config(format!(
                "score: expected {} features, got {}",
                self.standardizer.mean.len(),
                x.ncols()
            )));
        }
        let z = self.standardizer.transform(x);
        let scores = match &self.inner {
            ModelInner::Knn(m) => m.score(&z, self.spec.k),
            ModelInner::Dt(t) => t.score(&z),
            ModelInner::Gb(g) => g.score(&z),
            ModelInner::Svm(machines) => {
                let mut s = DMatrix::zeros(z.nrows(), machines.len());
                for (c, m) in machines.iter().enumerate() {
                    for i in 0..z.nrows() {
                        s[(i, c)] = m.decision_row(&z, i);
                    }
                }
                s
            }
        };
        Ok(scores)
    }

    /// Predicted class codes: the argmax of [`TrainedModel::score`], with
    /// ties broken toward the lowest class code.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<i32>> {
        let scores = self.score(x)?;
        Ok((0..scores.nrows())
            .map(|i| {
                let mut best = 0usize;
                for c in 1..scores.ncols() {
                    if scores[(i, c)] > scores[(i, best)] {
                        best = c;
                    }
                }
                self.classes[best]
            })
            .collect())
    }
}

/// Stratified fold assignment used by [`grid_search`]: samples of each class
/// (in ascending class-code order, original order within a class) are dealt
/// round-robin across folds. Falls back to leave-one-out when there are
/// fewer than `folds * |classes|` samples.
pub fn stratified_folds(y: &[i32], folds: usize) -> Vec<usize> {
    let mut classes: Vec<i32> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if y.len() < folds * classes.len() {
        return (0..y.len()).collect(); // leave-one-out
    }
    let mut assignment = vec![0usize; y.len()];
    for &cls in &classes {
        let mut next = 0usize;
        for (i, &l) in y.iter().enumerate() {
            if l == cls {
                assignment[i] = next % folds;
                next += 1;
            }
        }
    }
    assignment
}

/// Exhaustive grid search scored by stratified cross-validation accuracy.
///
/// Grid points are enumerated with keys in ascending name order, first key
/// outermost, values in listed order; ties keep the earliest point. Returns
/// the winning spec and its CV accuracy.
pub fn grid_search(
    kind: ClassifierKind,
    grid: &Grid,
    x: &DMatrix<f64>,
    y: &[i32],
    folds: usize,
) -> Result<(ClassifierSpec, f64)> {
    if x.nrows() != y.len() || x.nrows() == 0 {
        return Err(Error::Config("grid_search: empty or mismatched data".into()));
    }
    if folds < 2 {
        return Err(Error::Config("grid_search: folds must be >= 2".into()));
    }
    let points = enumerate_grid(grid);
    let assignment = stratified_folds(y, folds);
    let n_folds = assignment.iter().copied().max().unwrap_or(0) + 1;

    let mut best: Option<(ClassifierSpec, f64)> = None;
    for point in &points {
        let spec = ClassifierSpec::from_grid_point(kind, point, x.ncols())?;
        let mut correct = 0usize;
        for fold in 0..n_folds {
            let train: Vec<usize> = (0..y.len()).filter(|i| assignment[*i] != fold).collect();
            let test: Vec<usize> = (0..y.len()).filter(|i| assignment[*i] == fold).collect();
            if test.is_empty() {
                continue;
            }
            let xt = select_rows(x, &train);
            let yt: Vec<i32> = train.iter().map(|&i| y[i]).collect();
            let Ok(model) = fit(&spec, &xt, &yt) else {
                continue; // e.g. a LOO train set collapsed to one class
            };
            let xv = select_rows(x, &test);
            let pred = model.predict(&xv)?;
            correct += test
                .iter()
                .zip(&pred)
                .filter(|(&i, &p)| y[i] == p)
                .count();
        }
        let acc = correct as f64 / y.len() as f64;
        let better = match &best {
            None => true,
            Some((_, best_acc)) => acc > *best_acc,
        };
        if better {
            best = Some((spec, acc));
        }
    }
    best.ok_or_else(|| Error::Config("grid_search: empty grid".into()))
}

/// Cartesian product of the grid, keys ascending, first key outermost.
pub(crate) fn enumerate_grid(grid: &Grid) -> Vec<BTreeMap<String, f64>> {
    let mut points: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new()];
    for (key, values) in grid {
        let mut expanded = Vec::with_capacity(points.len() * values.len().max(1));
        for base in &points {
            for &v in values {
                let mut p = base.clone();
                p.insert(key.clone(), v);
                expanded.push(p);
            }
        }
        if !values.is_empty() {
            points = expanded;
        }
    }
    points
}

/// Copies the given rows of `x` into a new matrix.
pub(crate) fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows.len(), x.ncols());
    for (new_i, &i) in rows.iter().enumerate() {
        out.set_row(new_i, &x.row(i));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Four well-separated Gaussian-ish blobs, one per class code.
    fn blobs(n_per: usize) -> (DMatrix<f64>, Vec<i32>) {
        let centers = [(0.0, 0.0), (6.0, 0.0), (0.0, 6.0), (6.0, 6.0)];
        let n = n_per * 4;
        let mut x = DMatrix::zeros(n, 2);
        let mut y = Vec::with_capacity(n);
        for (c, &(cx, cy)) in centers.iter().enumerate() {
            for i in 0..n_per {
                let row = c * n_per + i;
                // Deterministic low-discrepancy jitter.
                let jx = ((i * 37 + c * 11) % 20) as f64 / 20.0 - 0.5;
                let jy = ((i * 53 + c * 7) % 20) as f64 / 20.0 - 0.5;
                x[(row, 0)] = cx + jx;
                x[(row, 1)] = cy + jy;
                y.push(c as i32 + 1);
            }
        }
        (x, y)
    }

    /// XOR layout: linearly inseparable, tree-separable.
    fn xor_data() -> (DMatrix<f64>, Vec<i32>) {
        // Unbalanced quadrants (14/6 per half) give the axis midlines
        // strictly positive Gini gain, so the greedy splitter can carve the
        // four quadrants; shared jitter endpoints keep single-quadrant
        // splinter splits impure.
        let grid = |count: usize, r: usize| r as f64 * 0.88 / (count - 1) as f64;
        let mut pts: Vec<(f64, f64, i32)> = Vec::new();
        for r in 0..14 {
            pts.push((grid(14, r), grid(14, r) * 0.75, 1)); // low-x, low-y
            pts.push((4.0 + grid(14, r), grid(14, r) * 0.75, 2)); // high-x, low-y
        }
        for r in 0..6 {
            pts.push((4.0 + grid(6, r), 4.0 + grid(6, r) * 0.75, 1)); // high-x, high-y
            pts.push((grid(6, r), 4.0 + grid(6, r) * 0.75, 2)); // low-x, high-y
        }
        let mut x = DMatrix::zeros(pts.len(), 2);
        let mut y = Vec::with_capacity(pts.len());
        for (i, &(a, b, c)) in pts.iter().enumerate() {
            x[(i, 0)] = a;
            x[(i, 1)] = b;
            y.push(c);
        }
        (x, y)
    }

    #[test]
    fn all_kinds_fit_separable_blobs() {
        let (x, y) = blobs(10);
        for spec in [
            ClassifierSpec::knn(3),
            ClassifierSpec::dt(5),
            ClassifierSpec::gb(20, 0.1, 3),
            ClassifierSpec::svml(1.0),
            ClassifierSpec::svmr(1.0, 0.5),
        ] {
            let model = fit(&spec, &x, &y).unwrap();
            let pred = model.predict(&x).unwrap();
            let acc = pred.iter().zip(&y).filter(|(p, t)| p == t).count() as f64 / y.len() as f64;
            assert!(
                acc >= 0.95,
                "{:?} got accuracy {acc} on separable blobs",
                spec.kind
            );
        }
    }

    #[test]
    fn knn_scores_are_vote_fractions() {
        // Neighbors at distance ~1 with classes {2, 2, 3}: scores 2/3, 1/3.
        let x = DMatrix::from_row_slice(4, 1, &[0.0, 0.2, -0.2, 50.0]);
        let y = vec![2, 2, 3, 3];
        let model = fit(&ClassifierSpec::knn(3), &x, &y).unwrap();
        let q = DMatrix::from_row_slice(1, 1, &[0.0]);
        let s = model.score(&q).unwrap();
        assert!((s[(0, 0)] - 2.0 / 3.0).abs() < 1e-12);
        assert!((s[(0, 1)] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(model.predict(&q).unwrap(), vec![2]);
    }

    #[test]
    fn tree_solves_xor_linear_svm_does_not() {
        let (x, y) = xor_data();
        let tree = fit(&ClassifierSpec::dt(3), &x, &y).unwrap();
        let tree_acc = accuracy(&tree, &x, &y);
        assert_eq!(tree_acc, 1.0, "depth-2+ tree must solve XOR");

        // The best halfplane on this layout isolates one 14-point quadrant
        // and takes the majority elsewhere: (14 + 20) / 40 = 0.85.
        let svm = fit(&ClassifierSpec::svml(10.0), &x, &y).unwrap();
        let svm_acc = accuracy(&svm, &x, &y);
        assert!(
            svm_acc <= 0.85 + 1e-12,
            "linear SVM cannot separate XOR, accuracy {svm_acc}"
        );
    }

    fn accuracy(model: &TrainedModel, x: &DMatrix<f64>, y: &[i32]) -> f64 {
        let pred = model.predict(x).unwrap();
        pred.iter().zip(y).filter(|(p, t)| p == t).count() as f64 / y.len() as f64
    }

    #[test]
    fn gb_with_zero_trees_predicts_prior_argmax() {
        let (x, mut y) = blobs(5);
        // Make class 3 the majority.
        for l in y.iter_mut().take(8) {
            *l = 3;
        }
        let model = fit(&ClassifierSpec::gb(0, 0.1, 3), &x, &y).unwrap();
        let pred = model.predict(&x).unwrap();
        assert!(pred.iter().all(|&p| p == 3));
    }

    #[test]
    fn svm_margins_respect_kkt_on_support_vectors() {
        let (x, y) = blobs(8);
        let spec = ClassifierSpec::svml(1.0);
        let model = fit(&spec, &x, &y).unwrap();
        // For each OVR machine, recompute margins on the training set and
        // check y_i f(x_i) >= 1 - xi at tolerance for free support vectors.
        let scores = model.score(&x).unwrap();
        for (ci, &cls) in model.classes().iter().enumerate() {
            for i in 0..y.len() {
                let target = if y[i] == cls { 1.0 } else { -1.0 };
                let margin = target * scores[(i, ci)];
                // Soft-margin feasibility: slack is max(0, 1 - margin); no
                // training point may sit beyond its slack at tolerance.
                assert!(
                    margin >= 1.0 - (1.0 - margin).max(0.0) - 1e-6,
                    "KKT slack violated at sample {i}"
                );
            }
        }
    }

    #[test]
    fn single_class_training_fails() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]);
        assert!(fit(&ClassifierSpec::knn(1), &x, &[1, 1, 1]).is_err());
    }

    #[test]
    fn grid_search_prefers_first_on_ties_and_is_deterministic() {
        let (x, y) = blobs(8);
        let grid = Grid::from([("k".to_string(), vec![1.0, 3.0, 5.0])]);
        let (spec_a, acc_a) = grid_search(ClassifierKind::Knn, &grid, &x, &y, 3).unwrap();
        let (spec_b, acc_b) = grid_search(ClassifierKind::Knn, &grid, &x, &y, 3).unwrap();
        assert_eq!(spec_a, spec_b);
        assert_eq!(acc_a, acc_b);
        // Blobs are separable at every k, so the tie must keep k = 1.
        assert_eq!(spec_a.k, 1);
        assert!(acc_a >= 0.95);
    }

    #[test]
    fn stratified_folds_keep_every_class_in_every_fold() {
        // 24 labeled samples, 4 classes with at least 5 each: 3 folds must
        // each see at least one sample of every class.
        let y: Vec<i32> = (0..24).map(|i| (i % 4) as i32 + 1).collect();
        let folds = stratified_folds(&y, 3);
        for fold in 0..3 {
            for cls in 1..=4 {
                assert!(
                    y.iter()
                        .zip(&folds)
                        .any(|(&l, &f)| l == cls && f == fold),
                    "class {cls} missing from fold {fold}"
                );
            }
        }
    }

    #[test]
    fn stratified_folds_fall_back_to_loo() {
        let y = vec![1, 1, 2, 2, 3, 3, 4, 4]; // 8 < 3 * 4
        let folds = stratified_folds(&y, 3);
        assert_eq!(folds, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn grid_enumeration_order_is_documented() {
        let grid = Grid::from([
            ("b".to_string(), vec![10.0, 20.0]),
            ("a".to_string(), vec![1.0, 2.0]),
        ]);
        let points = enumerate_grid(&grid);
        let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p["a"], p["b"])).collect();
        // "a" sorts first, so it is the outer loop.
        assert_eq!(pairs, vec![(1.0, 10.0), (1.0, 20.0), (2.0, 10.0), (2.0, 20.0)]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn standardizer_round_trips(seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = crate::seed::rng_from(seed);
            let x = DMatrix::from_fn(7, 3, |_, _| rng.gen_range(-100.0..100.0));
            let st = Standardizer::fit(&x);
            let z = st.transform(&x);
            let back = st.inverse_transform(&z);
            for (a, b) in x.iter().zip(back.iter()) {
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }
        }

        #[test]
        fn standardized_columns_have_zero_mean_unit_scale(seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = crate::seed::rng_from(seed);
            let x = DMatrix::from_fn(20, 2, |_, _| rng.gen_range(-5.0..5.0));
            let st = Standardizer::fit(&x);
            let z = st.transform(&x);
            for j in 0..2 {
                let mu: f64 = z.column(j).iter().sum::<f64>() / 20.0;
                let var: f64 = z.column(j).iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / 20.0;
                prop_assert!(mu.abs() < 1e-9);
                prop_assert!((var - 1.0).abs() < 1e-9);
            }
        }
    }
}
