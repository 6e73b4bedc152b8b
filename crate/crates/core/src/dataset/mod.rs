//! Core data types shared by the whole pipeline: event classes, raw event
//! recordings, extracted feature tables, experiment plans and result rows,
//! plus their on-disk formats (long-format CSV per event + JSON manifest,
//! one CSV for features, one CSV for results).
//!
//! All floating-point values are serialized with 17 significant digits so
//! that write → read round-trips reproduce every `f64` bit for bit.

mod io;
mod plan;

pub use io::{read_events, read_features, write_events, write_features, MANIFEST_NAME};
pub use plan::{default_grids, EngineKind, ExperimentPlan, Grid};

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Label code used for unlabeled samples throughout the pipeline.
pub const UNLABELED: i32 = -1;

/// The four disturbance classes, with their fixed integer codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventClass {
    /// Load loss.
    LL,
    /// Generation loss.
    GL,
    /// Line trip.
    LT,
    /// Bus fault.
    BF,
}

impl EventClass {
    /// All classes in code order.
    pub const ALL: [EventClass; 4] = [
        EventClass::LL,
        EventClass::GL,
        EventClass::LT,
        EventClass::BF,
    ];

    /// Integer code stored in label columns (LL=1, GL=2, LT=3, BF=4).
    pub fn code(self) -> i32 {
        match self {
            EventClass::LL => 1,
            EventClass::GL => 2,
            EventClass::LT => 3,
            EventClass::BF => 4,
        }
    }

    /// Inverse of [`EventClass::code`].
    pub fn from_code(code: i32) -> Result<EventClass> {
        match code {
            1 => Ok(EventClass::LL),
            2 => Ok(EventClass::GL),
            3 => Ok(EventClass::LT),
            4 => Ok(EventClass::BF),
            other => Err(Error::Format(format!("unknown class code {other}"))),
        }
    }

    /// Short name used in file names and CSV cells.
    pub fn name(self) -> &'static str {
        match self {
            EventClass::LL => "LL",
            EventClass::GL => "GL",
            EventClass::LT => "LT",
            EventClass::BF => "BF",
        }
    }

    /// Inverse of [`EventClass::name`].
    pub fn from_name(name: &str) -> Result<EventClass> {
        match name {
            "LL" => Ok(EventClass::LL),
            "GL" => Ok(EventClass::GL),
            "LT" => Ok(EventClass::LT),
            "BF" => Ok(EventClass::BF),
            other => Err(Error::Format(format!("unknown class name {other:?}"))),
        }
    }
}

impl fmt::Display for EventClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The three measured channels, in their fixed storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    /// Voltage magnitude.
    Vm,
    /// Voltage angle.
    Va,
    /// Frequency.
    F,
}

impl Channel {
    /// Storage order of channel blocks inside an event matrix.
    pub const ALL: [Channel; 3] = [Channel::Vm, Channel::Va, Channel::F];

    /// Name used in the per-event CSV `channel` column.
    pub fn name(self) -> &'static str {
        match self {
            Channel::Vm => "V_m",
            Channel::Va => "V_a",
            Channel::F => "F",
        }
    }

    /// Short tag used in feature-column names.
    pub fn tag(self) -> &'static str {
        match self {
            Channel::Vm => "Vm",
            Channel::Va => "Va",
            Channel::F => "F",
        }
    }

    /// Inverse of [`Channel::name`].
    pub fn from_name(name: &str) -> Result<Channel> {
        match name {
            "V_m" => Ok(Channel::Vm),
            "V_a" => Ok(Channel::Va),
            "F" => Ok(Channel::F),
            other => Err(Error::Format(format!("unknown channel {other:?}"))),
        }
    }

    /// Index of the channel block inside an event matrix.
    pub fn block(self) -> usize {
        match self {
            Channel::Vm => 0,
            Channel::Va => 1,
            Channel::F => 2,
        }
    }
}

/// One multi-channel PMU recording of a single event.
///
/// `data` stacks the three channel blocks vertically: rows `0..m` are `V_m`,
/// rows `m..2m` are `V_a`, rows `2m..3m` are `F`; columns are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    /// Unique identifier, also used as the CSV file stem.
    pub event_id: String,
    /// Ground-truth class, or `None` for unlabeled recordings.
    pub class: Option<EventClass>,
    /// Sampling rate in Hz; the sample period is `1 / sample_rate_hz`.
    pub sample_rate_hz: f64,
    /// Number of PMUs per channel.
    pub m: usize,
    /// `3m x N` matrix of samples.
    pub data: DMatrix<f64>,
    /// Generator parameters (ground-truth modes, offsets, ...), free-form.
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl EventRecord {
    /// Validates shapes and values and builds a record.
    pub fn new(
        event_id: impl Into<String>,
        class: Option<EventClass>,
        sample_rate_hz: f64,
        m: usize,
        data: DMatrix<f64>,
        meta: BTreeMap<String, serde_json::Value>,
    ) -> Result<EventRecord> {
        let event_id = event_id.into();
        validate_event_id(&event_id)?;
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Config(format!(
                "event {event_id}: sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if m == 0 {
            return Err(Error::Config(format!("event {event_id}: m must be >= 1")));
        }
        if data.nrows() != 3 * m {
            return Err(Error::Config(format!(
                "event {event_id}: data has {} rows, expected 3*m = {}",
                data.nrows(),
                3 * m
            )));
        }
        if data.ncols() == 0 {
            return Err(Error::Config(format!(
                "event {event_id}: data has no samples"
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "event {event_id}: data contains a non-finite value"
            )));
        }
        Ok(EventRecord {
            event_id,
            class,
            sample_rate_hz,
            m,
            data,
            meta,
        })
    }

    /// Number of samples per stream.
    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    /// Sample period in seconds.
    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    /// The `m x N` block of one channel.
    pub fn channel(&self, c: Channel) -> DMatrix<f64> {
        self.data.rows(c.block() * self.m, self.m).into_owned()
    }
}

/// Event ids double as file stems; restrict them to a filesystem-safe set.
fn validate_event_id(id: &str) -> Result<()> {
    if id.is_empty() {
        return Err(Error::Config("event id must not be empty".into()));
    }
    if !id
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
    {
        return Err(Error::Config(format!(
            "event id {id:?} contains characters outside [A-Za-z0-9_-]"
        )));
    }
    Ok(())
}

/// A table of modal feature vectors, one row per event.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    /// Event ids, one per row.
    pub event_ids: Vec<String>,
    /// Class codes (1..=4) or [`UNLABELED`].
    pub labels: Vec<i32>,
    /// `n x d` feature matrix.
    pub x: DMatrix<f64>,
    /// Column names, produced by [`feature_names`].
    pub feature_names: Vec<String>,
    /// Modes retained per channel.
    pub p: usize,
    /// PMUs retained per channel.
    pub m_prime: usize,
}

impl FeatureDataset {
    /// Validates shapes, the column-count formula and label codes.
    pub fn new(
        event_ids: Vec<String>,
        labels: Vec<i32>,
        x: DMatrix<f64>,
        p: usize,
        m_prime: usize,
    ) -> Result<FeatureDataset> {
        let d = feature_dim(p, m_prime);
        if x.ncols() != d {
            return Err(Error::Config(format!(
                "feature matrix has {} columns, expected 2*p*|C|*(m'+1) = {} for p={p}, m'={m_prime}",
                x.ncols(),
                d
            )));
        }
        if event_ids.len() != x.nrows() || labels.len() != x.nrows() {
            return Err(Error::Config(format!(
                "feature table rows disagree: {} ids, {} labels, {} feature rows",
                event_ids.len(),
                labels.len(),
                x.nrows()
            )));
        }
        for (id, &l) in event_ids.iter().zip(&labels) {
            if l != UNLABELED {
                EventClass::from_code(l)
                    .map_err(|_| Error::Config(format!("event {id}: invalid label {l}")))?;
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(
                "feature matrix contains a non-finite value".into(),
            ));
        }
        Ok(FeatureDataset {
            event_ids,
            labels,
            x,
            feature_names: feature_names(p, m_prime),
            p,
            m_prime,
        })
    }

    /// Number of events (rows).
    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    /// True when the table has no rows.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of feature columns.
    pub fn dim(&self) -> usize {
        self.x.ncols()
    }
}

/// Feature-vector length: `2p` pole values plus `2p` residue values for each
/// of the `m'` retained PMUs, for each of the three channels.
pub fn feature_dim(p: usize, m_prime: usize) -> usize {
    2 * p * Channel::ALL.len() * (m_prime + 1)
}

/// Canonical feature-column names for retained modes `1..=p` and retained
/// PMU slots `1..=m_prime`, per channel. Slot indices rank PMUs by the
/// magnitude of their mode-1 residue, not by PMU id.
pub fn feature_names(p: usize, m_prime: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(feature_dim(p, m_prime));
    for ch in Channel::ALL {
        let tag = ch.tag();
        for k in 1..=p {
            names.push(format!("{tag}_omega{k}"));
        }
        for k in 1..=p {
            names.push(format!("{tag}_sigma{k}"));
        }
        for j in 1..=m_prime {
            for k in 1..=p {
                names.push(format!("{tag}_r{j}_mag{k}"));
            }
            for k in 1..=p {
                names.push(format!("{tag}_r{j}_ang{k}"));
            }
        }
    }
    names
}

/// One scored experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    /// Pseudo-labeling engine name (`self_training`, `tsvm`, `label_spreading`).
    pub engine: String,
    /// Final classifier kind (for self-training, also the base learner).
    pub classifier: String,
    /// Fold index, `0..n_K`.
    pub k: usize,
    /// Labeled-split index, `0..n_Q`.
    pub q: usize,
    /// Step index, `0..n_steps`.
    pub s: usize,
    /// Reselection index, `0..n_R` (always 0 at `s = 0`).
    pub r: usize,
    /// Unlabeled pool size at this step.
    pub n_u_s: usize,
    /// Macro one-vs-rest ROC-AUC on the validation fold.
    pub auc: f64,
    /// Whether the engine's iteration converged (always true for engines
    /// without an iteration limit).
    pub converged: bool,
    /// Wall-clock time of the cell in milliseconds. Not deterministic, so it
    /// is written to a separate timings sidecar, never to the results CSV
    /// (`skip` keeps it out of serialized rows; reads default it to zero).
    #[serde(skip)]
    pub wall_ms: u64,
}

impl ResultRecord {
    /// Grouping key identifying the cell.
    pub fn key(&self) -> (String, String, usize, usize, usize, usize) {
        (
            self.engine.clone(),
            self.classifier.clone(),
            self.k,
            self.q,
            self.s,
            self.r,
        )
    }
}

/// Formats an `f64` with 17 significant digits, enough for an exact
/// parse-back on any platform with IEEE-754 doubles.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parses a float written by [`fmt_f64`] (or any standard decimal float).
pub(crate) fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("{what}: invalid float {s:?}")))
}
