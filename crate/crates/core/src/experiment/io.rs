//! CSV persistence for per-cell results, aggregates, timings, and failures.
//!
//! Result files are written in a canonical sort order with exact
//! (round-tripping) float formatting, so identical runs produce
//! byte-identical files. Wall-clock timings are not deterministic and live
//! in a separate sidecar, never in the results file itself.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::auc::AggregateRow;
use crate::dataset::ResultRecord;
use crate::{Error, Result};

/// One failed experiment cell, kept out of the aggregates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    /// Engine name.
    pub engine: String,
    /// Classifier name.
    pub classifier: String,
    /// Fold index.
    pub k: usize,
    /// Label-split index.
    pub q: usize,
    /// Step index.
    pub s: usize,
    /// Repeat index.
    pub r: usize,
    /// What went wrong.
    pub error: String,
}

impl FailureRecord {
    /// Identity of the failed cell.
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

fn werr(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format(format!("{}: {e}", path.display()))
}

/// Writes per-cell results sorted by (engine, classifier, k, q, s, r).
/// The wall-clock field is excluded, so reruns are byte-identical.
pub fn write_results(path: &Path, records: &[ResultRecord]) -> Result<()> {
    let mut rows = records.to_vec();
    rows.sort_by_key(ResultRecord::key);
    let mut w = csv::Writer::from_path(path).map_err(|e| werr(path, e))?;
    for rec in &rows {
        w.serialize(rec).map_err(|e| werr(path, e))?;
    }
    if rows.is_empty() {
        w.write_record(["engine", "classifier", "k", "q", "s", "r", "n_u_s", "auc", "converged"])
            .map_err(|e| werr(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

/// Reads a results file written by [`write_results`]. Wall-clock times are
/// not stored there, so they come back as zero.
pub fn read_results(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| werr(path, e))?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row.map_err(|e| werr(path, e))?);
    }
    Ok(out)
}

/// Writes the failure sidecar sorted the same way as the results. An empty
/// list still writes a header line, so downstream tooling can distinguish
/// "no failures" from "file never written".
pub fn write_failures(path: &Path, records: &[FailureRecord]) -> Result<()> {
    let mut rows = records.to_vec();
    rows.sort_by_key(FailureRecord::key);
    let mut w = csv::Writer::from_path(path).map_err(|e| werr(path, e))?;
    for rec in &rows {
        w.serialize(rec).map_err(|e| werr(path, e))?;
    }
    if rows.is_empty() {
        w.write_record(["engine", "classifier", "k", "q", "s", "r", "error"])
            .map_err(|e| werr(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

/// Reads a failure sidecar written by [`write_failures`].
pub fn read_failures(path: &Path) -> Result<Vec<FailureRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| werr(path, e))?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row.map_err(|e| werr(path, e))?);
    }
    Ok(out)
}

/// Writes the wall-clock sidecar (cell key plus milliseconds), sorted by
/// cell key.
pub fn write_timings(path: &Path, records: &[ResultRecord]) -> Result<()> {
    let mut rows = records.to_vec();
    rows.sort_by_key(ResultRecord::key);
    let mut w = csv::Writer::from_path(path).map_err(|e| werr(path, e))?;
    w.write_record(["engine", "classifier", "k", "q", "s", "r", "wall_ms"])
        .map_err(|e| werr(path, e))?;
    for rec in &rows {
        w.write_record([
            rec.engine.as_str(),
            rec.classifier.as_str(),
            &rec.k.to_string(),
            &rec.q.to_string(),
            &rec.s.to_string(),
            &rec.r.to_string(),
            &rec.wall_ms.to_string(),
        ])
        .map_err(|e| werr(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

/// Writes the aggregate table (already sorted by the aggregator).
pub fn write_aggregates(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| werr(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| werr(path, e))?;
    }
    if rows.is_empty() {
        w.write_record([
            "engine", "classifier", "s", "n_U_s", "mean_auc", "p5_auc", "p95_auc", "n_cells",
        ])
        .map_err(|e| werr(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path.display().to_string(), e))
}

/// Reads an aggregate table written by [`write_aggregates`].
pub fn read_aggregates(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| werr(path, e))?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row.map_err(|e| werr(path, e))?);
    }
    Ok(out)
}
