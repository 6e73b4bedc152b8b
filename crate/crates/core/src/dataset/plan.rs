//! Experiment plan: the knobs of the k-fold / labeled-split / step-growth
//! robustness protocol, deserialized from a flat JSON key set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::ClassifierKind;
use crate::dataset::EventClass;
use crate::{Error, Result};

/// A pseudo-labeling engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EngineKind {
    /// Batched self-training around a base classifier (the base is the same
    /// kind as the final classifier).
    #[serde(rename = "self_training")]
    SelfTraining,
    /// Transductive SVM with label-switching local search.
    #[serde(rename = "tsvm")]
    Tsvm,
    /// Graph label spreading on an RBF affinity graph.
    #[serde(rename = "label_spreading")]
    LabelSpreading,
}

impl EngineKind {
    /// Name used in config files and result rows.
    pub fn name(self) -> &'static str {
        match self {
            EngineKind::SelfTraining => "self_training",
            EngineKind::Tsvm => "tsvm",
            EngineKind::LabelSpreading => "label_spreading",
        }
    }
}

/// One hyperparameter grid: parameter name to candidate values, tried in the
/// given order. Integer-valued parameters (k, depths, tree counts) are
/// stored as floats and rounded at fit time.
pub type Grid = BTreeMap<String, Vec<f64>>;

/// Protocol parameters. JSON keys mirror the usual protocol symbols
/// (`n_K` folds, `n_Q` labeled splits, `n_L` labeled samples, `delta_U`
/// step growth, `n_R` reselections, `B_min`/`B_max` class-balance bounds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    /// Number of cross-validation folds.
    #[serde(rename = "n_K")]
    pub n_k: usize,
    /// Number of labeled/unlabeled splits per fold.
    #[serde(rename = "n_Q")]
    pub n_q: usize,
    /// Number of labeled samples per split.
    #[serde(rename = "n_L")]
    pub n_l: usize,
    /// Unlabeled-pool growth per step.
    #[serde(rename = "delta_U")]
    pub delta_u: usize,
    /// Number of unlabeled reselections per step (step 0 is evaluated once).
    #[serde(rename = "n_R")]
    pub n_r: usize,
    /// Lower bound on each class's share of the labeled split.
    #[serde(rename = "B_min")]
    pub b_min: f64,
    /// Upper bound on each class's share of the labeled split.
    #[serde(rename = "B_max")]
    pub b_max: f64,
    /// Master seed; every other seed in the run is derived from it.
    pub master_seed: u64,
    /// Engines to evaluate.
    #[serde(default = "default_engines")]
    pub engines: Vec<EngineKind>,
    /// Final classifiers. Self-training pairs each with itself as the base
    /// learner; transductive engines cross with every classifier listed.
    #[serde(default = "default_classifiers")]
    pub classifiers: Vec<ClassifierKind>,
    /// Hyperparameter search spaces, keyed by classifier/engine name.
    /// Missing keys fall back to [`default_grids`].
    #[serde(default)]
    pub grids: BTreeMap<String, Grid>,
    /// Self-training batch size; defaults to `delta_U` when absent.
    #[serde(default)]
    pub self_train_batch: Option<usize>,
    /// Rejection-sampling budget for balanced labeled splits.
    #[serde(default = "default_max_tries")]
    pub max_split_tries: usize,
    /// Optional explicit list of (engine, classifier) combinations to run;
    /// when absent, every engine crosses every classifier.
    #[serde(default)]
    pub pairs: Option<Vec<(EngineKind, ClassifierKind)>>,
}

fn default_engines() -> Vec<EngineKind> {
    vec![
        EngineKind::SelfTraining,
        EngineKind::Tsvm,
        EngineKind::LabelSpreading,
    ]
}

fn default_classifiers() -> Vec<ClassifierKind> {
    vec![
        ClassifierKind::Knn,
        ClassifierKind::Dt,
        ClassifierKind::Gb,
        ClassifierKind::Svml,
        ClassifierKind::Svmr,
    ]
}

fn default_max_tries() -> usize {
    10_000
}

/// Default hyperparameter grids. RBF `gamma` values are divided by the
/// feature count at fit time, so the listed values are dimension-free.
pub fn default_grids() -> BTreeMap<String, Grid> {
    let mut grids = BTreeMap::new();
    grids.insert(
        "kNN".to_string(),
        Grid::from([("k".to_string(), vec![1.0, 3.0, 5.0, 7.0])]),
    );
    grids.insert(
        "DT".to_string(),
        Grid::from([("max_depth".to_string(), vec![3.0, 5.0, 10.0])]),
    );
    grids.insert(
        "GB".to_string(),
        Grid::from([
            ("n_trees".to_string(), vec![50.0, 100.0]),
            ("learning_rate".to_string(), vec![0.05, 0.1]),
            ("max_depth".to_string(), vec![3.0]),
        ]),
    );
    grids.insert(
        "SVML".to_string(),
        Grid::from([("C".to_string(), vec![0.1, 1.0, 10.0, 100.0])]),
    );
    grids.insert(
        "SVMR".to_string(),
        Grid::from([
            ("C".to_string(), vec![0.1, 1.0, 10.0, 100.0]),
            ("gamma".to_string(), vec![0.01, 0.1, 1.0]),
        ]),
    );
    grids.insert(
        "tsvm".to_string(),
        Grid::from([("C".to_string(), vec![0.1, 1.0, 10.0, 100.0])]),
    );
    grids.insert(
        "label_spreading".to_string(),
        Grid::from([
            ("alpha".to_string(), vec![0.1, 0.2, 0.5]),
            ("sigma_scale".to_string(), vec![1.0]),
        ]),
    );
    grids
}

impl ExperimentPlan {
    /// Parses a plan from flat JSON, applying defaults, and validates it.
    pub fn from_json(json: &str) -> Result<ExperimentPlan> {
        let plan: ExperimentPlan =
            serde_json::from_str(json).map_err(|e| Error::Config(format!("plan: {e}")))?;
        plan.validate()?;
        Ok(plan)
    }

    /// Checks the data-independent invariants.
    pub fn validate(&self) -> Result<()> {
        if self.n_k < 2 {
            return Err(Error::Config(format!(
                "n_K must be >= 2, got {}",
                self.n_k
            )));
        }
        if self.n_q == 0 || self.n_r == 0 || self.n_l == 0 || self.delta_u == 0 {
            return Err(Error::Config(
                "n_Q, n_R, n_L and delta_U must all be >= 1".into(),
            ));
        }
        if !(self.b_min.is_finite() && self.b_max.is_finite()) {
            return Err(Error::Config("B_min and B_max must be finite".into()));
        }
        if self.b_min < 0.0 || self.b_max > 1.0 || self.b_min > self.b_max {
            return Err(Error::Config(format!(
                "balance bounds must satisfy 0 <= B_min <= B_max <= 1, got ({}, {})",
                self.b_min, self.b_max
            )));
        }
        let n_classes = EventClass::ALL.len() as f64;
        if n_classes * self.b_min > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "B_min = {} is infeasible with {} classes (sum of lower bounds exceeds 1)",
                self.b_min, n_classes as usize
            )));
        }
        if self.engines.is_empty() || self.classifiers.is_empty() {
            return Err(Error::Config(
                "engines and classifiers must be non-empty".into(),
            ));
        }
        let mut e = self.engines.clone();
        e.sort();
        e.dedup();
        if e.len() != self.engines.len() {
            return Err(Error::Config("duplicate engine listed".into()));
        }
        let mut c = self.classifiers.clone();
        c.sort();
        c.dedup();
        if c.len() != self.classifiers.len() {
            return Err(Error::Config("duplicate classifier listed".into()));
        }
        if self.max_split_tries == 0 {
            return Err(Error::Config("max_split_tries must be >= 1".into()));
        }
        if let Some(b) = self.self_train_batch {
            if b == 0 {
                return Err(Error::Config("self_train_batch must be >= 1".into()));
            }
        }
        if let Some(pairs) = &self.pairs {
            if pairs.is_empty() {
                return Err(Error::Config("pairs must be non-empty when given".into()));
            }
            let mut p = pairs.clone();
            p.sort();
            p.dedup();
            if p.len() != pairs.len() {
                return Err(Error::Config("duplicate (engine, classifier) pair".into()));
            }
        }
        Ok(())
    }

    /// Checks invariants that need the dataset size.
    pub fn validate_with_data(&self, n_d: usize) -> Result<()> {
        if n_d < self.n_k {
            return Err(Error::Config(format!(
                "dataset has {n_d} events, fewer than n_K = {}",
                self.n_k
            )));
        }
        let n_t = (self.n_k - 1) * n_d / self.n_k;
        if self.n_l >= n_t {
            return Err(Error::Config(format!(
                "n_L = {} must be smaller than the training-fold size n_T = {n_t}",
                self.n_l
            )));
        }
        Ok(())
    }

    /// Self-training batch size (defaults to the step growth `delta_U`).
    pub fn self_train_batch(&self) -> usize {
        self.self_train_batch.unwrap_or(self.delta_u)
    }

    /// The (engine, classifier) combinations the run covers: the explicit
    /// `pairs` list when present, else the full engine x classifier cross
    /// in listing order.
    pub fn combos(&self) -> Vec<(EngineKind, ClassifierKind)> {
        if let Some(pairs) = &self.pairs {
            return pairs.clone();
        }
        let mut out = Vec::with_capacity(self.engines.len() * self.classifiers.len());
        for &e in &self.engines {
            for &c in &self.classifiers {
                out.push((e, c));
            }
        }
        out
    }

    /// The grid for `name`, falling back to the built-in defaults.
    pub fn grid_for(&self, name: &str) -> Grid {
        if let Some(g) = self.grids.get(name) {
            return g.clone();
        }
        default_grids().get(name).cloned().unwrap_or_default()
    }
}
