//! On-disk formats: one long-format CSV per event plus a JSON manifest, and
//! a single CSV for feature tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    feature_names, fmt_f64, parse_f64, Channel, EventClass, EventRecord, FeatureDataset,
    UNLABELED,
};
use crate::{Error, Result};

/// File name of the dataset manifest inside an event directory.
pub const MANIFEST_NAME: &str = "manifest.json";

/// Manifest entry describing one stored event.
#[derive(Debug, Serialize, Deserialize)]
struct ManifestEvent {
    event_id: String,
    file: String,
    class: Option<EventClass>,
    sample_rate_hz: f64,
    m: usize,
    n_samples: usize,
    #[serde(default)]
    meta: BTreeMap<String, serde_json::Value>,
}

/// Top-level manifest structure.
#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    version: u32,
    events: Vec<ManifestEvent>,
}

/// Writes one CSV per event (columns `channel,pmu_index,sample_index,value`,
/// rows in channel-block / PMU / sample order) plus a JSON manifest, and
/// returns the manifest path. Values round-trip bit-exactly through
/// [`read_events`].
pub fn write_events(dir: &Path, records: &[EventRecord]) -> Result<PathBuf> {
    if records.is_empty() {
        return Err(Error::Config("refusing to write an empty dataset".into()));
    }
    let mut seen = BTreeSet::new();
    for rec in records {
        if !seen.insert(rec.event_id.as_str()) {
            return Err(Error::Config(format!(
                "duplicate event id {}",
                rec.event_id
            )));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;

    let mut entries = Vec::with_capacity(records.len());
    for rec in records {
        let file = format!("{}.csv", rec.event_id);
        let path = dir.join(&file);
        write_event_csv(&path, rec)?;
        entries.push(ManifestEvent {
            event_id: rec.event_id.clone(),
            file,
            class: rec.class,
            sample_rate_hz: rec.sample_rate_hz,
            m: rec.m,
            n_samples: rec.n_samples(),
            meta: rec.meta.clone(),
        });
    }
    let manifest = Manifest {
        version: 1,
        events: entries,
    };
    let manifest_path = dir.join(MANIFEST_NAME);
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Format(format!("manifest serialization failed: {e}")))?;
    fs::write(&manifest_path, json)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    Ok(manifest_path)
}

fn write_event_csv(path: &Path, rec: &EventRecord) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    w.write_record(["channel", "pmu_index", "sample_index", "value"])
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let n = rec.n_samples();
    for ch in Channel::ALL {
        for i in 0..rec.m {
            let row = ch.block() * rec.m + i;
            for t in 0..n {
                w.write_record([
                    ch.name(),
                    &i.to_string(),
                    &t.to_string(),
                    &fmt_f64(rec.data[(row, t)]),
                ])
                .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
            }
        }
    }
    w.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Reads a dataset written by [`write_events`], in manifest order.
pub fn read_events(manifest_path: &Path) -> Result<Vec<EventRecord>> {
    let json = fs::read_to_string(manifest_path)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    let manifest: Manifest = serde_json::from_str(&json)
        .map_err(|e| Error::Format(format!("{}: {e}", manifest_path.display())))?;
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let mut records = Vec::with_capacity(manifest.events.len());
    for entry in manifest.events {
        let path = dir.join(&entry.file);
        let data = read_event_csv(&path, &entry)?;
        records.push(EventRecord::new(
            entry.event_id,
            entry.class,
            entry.sample_rate_hz,
            entry.m,
            data,
            entry.meta,
        )?);
    }
    Ok(records)
}

fn read_event_csv(path: &Path, entry: &ManifestEvent) -> Result<DMatrix<f64>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| {
        Error::Format(format!(
            "event {}: cannot open {}: {e}",
            entry.event_id,
            path.display()
        ))
    })?;
    let (m, n) = (entry.m, entry.n_samples);
    let mut data = DMatrix::<f64>::zeros(3 * m, n);
    let mut count = 0usize;
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if row.len() != 4 {
            return Err(Error::Format(format!(
                "{}: line {}: expected 4 columns, got {}",
                path.display(),
                line + 2,
                row.len()
            )));
        }
        let ch = Channel::from_name(&row[0])?;
        let pmu: usize = row[1]
            .parse()
            .map_err(|_| Error::Format(format!("{}: bad pmu_index {:?}", path.display(), &row[1])))?;
        let t: usize = row[2].parse().map_err(|_| {
            Error::Format(format!("{}: bad sample_index {:?}", path.display(), &row[2]))
        })?;
        if pmu >= m || t >= n {
            return Err(Error::Format(format!(
                "{}: index ({pmu},{t}) out of range for m={m}, n={n}",
                path.display()
            )));
        }
        let value = parse_f64(&row[3], &format!("{}: value", path.display()))?;
        if !value.is_finite() {
            return Err(Error::Format(format!(
                "{}: non-finite value at channel {}, pmu {pmu}, sample {t}",
                path.display(),
                ch.name()
            )));
        }
        data[(ch.block() * m + pmu, t)] = value;
        count += 1;
    }
    if count != 3 * m * n {
        return Err(Error::Format(format!(
            "event {}: {} has {count} data rows, expected 3*m*n = {}",
            entry.event_id,
            path.display(),
            3 * m * n
        )));
    }
    Ok(data)
}

/// Writes a feature table as CSV with header `event_id,label,<names...>`.
pub fn write_features(path: &Path, features: &FeatureDataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut header = vec!["event_id".to_string(), "label".to_string()];
    header.extend(features.feature_names.iter().cloned());
    w.write_record(&header)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    for row in 0..features.len() {
        let mut rec = Vec::with_capacity(features.dim() + 2);
        rec.push(features.event_ids[row].clone());
        rec.push(features.labels[row].to_string());
        for col in 0..features.dim() {
            rec.push(fmt_f64(features.x[(row, col)]));
        }
        w.write_record(&rec)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    }
    w.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Reads a feature table written by [`write_features`], recovering the
/// extraction parameters `p` and `m'` from the column names.
pub fn read_features(path: &Path) -> Result<FeatureDataset> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let header = reader
        .headers()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
        .clone();
    if header.len() < 3 || &header[0] != "event_id" || &header[1] != "label" {
        return Err(Error::Format(format!(
            "{}: header must start with event_id,label",
            path.display()
        )));
    }
    let names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
    let p = names
        .iter()
        .filter(|n| n.starts_with("Vm_omega"))
        .count();
    let m_prime = names
        .iter()
        .filter(|n| n.starts_with("Vm_r") && n.contains("_mag1"))
        .count();
    if p == 0 || names != feature_names(p, m_prime) {
        return Err(Error::Format(format!(
            "{}: feature columns do not match the canonical layout",
            path.display()
        )));
    }

    let mut event_ids = Vec::new();
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if row.len() != names.len() + 2 {
            return Err(Error::Format(format!(
                "{}: line {}: expected {} columns, got {}",
                path.display(),
                line + 2,
                names.len() + 2,
                row.len()
            )));
        }
        event_ids.push(row[0].to_string());
        let label: i32 = row[1]
            .parse()
            .map_err(|_| Error::Format(format!("{}: bad label {:?}", path.display(), &row[1])))?;
        if label != UNLABELED {
            EventClass::from_code(label)?;
        }
        labels.push(label);
        for col in 0..names.len() {
            values.push(parse_f64(&row[col + 2], "feature value")?);
        }
    }
    let n = event_ids.len();
    let x = DMatrix::from_row_iterator(n, names.len(), values);
    FeatureDataset::new(event_ids, labels, x, p, m_prime)
}
