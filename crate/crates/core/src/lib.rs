//! Semi-supervised identification of power-system events from PMU ringdown
//! recordings.
//!
//! The library covers the full desk-scale pipeline:
//!
//! 1. [`synth`] — synthesize labeled multi-channel PMU event recordings as
//!    sums of damped sinusoids plus class-dependent trends and noise.
//! 2. [`modal`] — recover the dominant damped modes of each recording with a
//!    matrix-pencil estimator and assemble fixed-length modal feature vectors.
//! 3. [`classify`] — small from-scratch base classifiers (kNN, decision tree,
//!    gradient boosting, linear/RBF SVM) with grid search.
//! 4. [`ssl`] — semi-supervised pseudo-labeling engines: self-training, a
//!    transductive SVM, and graph label spreading.
//! 5. [`experiment`] — the k-fold / labeled-split / step-growth robustness
//!    protocol scored by percentile ROC-AUC.
//!
//! Everything is deterministic given a master seed: per-event and per-cell
//! seeds are derived by stable integer mixing, so reruns (at any thread
//! count) reproduce outputs byte for byte.

pub mod classify;
pub mod config;
pub mod dataset;
pub mod experiment;
pub mod modal;
pub mod seed;
pub mod ssl;
pub mod synth;

mod error;

pub use error::{Error, Result};
