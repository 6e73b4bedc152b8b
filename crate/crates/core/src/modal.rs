//! Matrix-pencil modal analysis and modal feature assembly.
//!
//! A recording's streams are modeled as sums of damped sinusoids sampled at
//! period `T_s`:
//!
//! ```text
//! y_i(n) = offset_i + sum_k |R_{k,i}| e^(sigma_k n T_s) cos(omega_k n T_s + theta_{k,i})
//! ```
//!
//! The poles `(sigma_k, omega_k)` are shared by all streams of a channel;
//! the residues `(|R|, theta)` are per stream. Estimation proceeds in the
//! classical matrix-pencil way: a block-Hankel matrix over all streams, a
//! rank-truncated decomposition of its row space, a shifted-pencil
//! eigenproblem for the discrete poles `Z_k`, then `lambda_k = ln(Z_k)/T_s`
//! and a linear least-squares fit of the residues. Complex-conjugate pole
//! pairs are merged into a single mode with `omega_k >= 0`; purely real
//! poles appear as modes with `omega_k = 0`.

use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};

use crate::dataset::{feature_dim, Channel, EventRecord, FeatureDataset};
use crate::{Error, Result};

/// Relative singular-value threshold for the numerical rank of the pencil.
const RANK_RTOL: f64 = 1e-7;
/// Below this angular frequency (rad/s) a pole is treated as purely real.
const OMEGA_REAL_EPS: f64 = 1e-9;
/// Discrete poles outside this magnitude band are discarded as artifacts.
const Z_MAG_MIN: f64 = 1e-6;
const Z_MAG_MAX: f64 = 1.2;

/// Parameters of the modal feature extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    /// Modes retained per channel (a conjugate pair counts once).
    #[serde(default = "default_p")]
    pub p: usize,
    /// PMUs retained per channel, ranked by mode-1 residue magnitude.
    #[serde(default = "default_m_prime")]
    pub m_prime: usize,
    /// Pencil parameter `L`; defaults to `floor(N/2)` when absent.
    #[serde(default)]
    pub pencil_l: Option<usize>,
    /// Subtract each stream's mean before estimation.
    #[serde(default = "default_true")]
    pub detrend: bool,
}

fn default_p() -> usize {
    6
}
fn default_m_prime() -> usize {
    10
}
fn default_true() -> bool {
    true
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            p: default_p(),
            m_prime: default_m_prime(),
            pencil_l: None,
            detrend: true,
        }
    }
}

impl ExtractionConfig {
    /// Effective pencil length for a recording of `n` samples.
    pub fn pencil_len(&self, n: usize) -> usize {
        self.pencil_l.unwrap_or(n / 2)
    }

    /// Validates `1 <= p <= L <= N-1` for a recording of `n` samples.
    pub fn validate_for(&self, n: usize) -> Result<()> {
        if self.p == 0 {
            return Err(Error::Config("extraction: p must be >= 1".into()));
        }
        if self.m_prime == 0 {
            return Err(Error::Config("extraction: m_prime must be >= 1".into()));
        }
        if n < 2 {
            return Err(Error::Config(format!(
                "extraction: need at least 2 samples, got {n}"
            )));
        }
        let l = self.pencil_len(n);
        if l < 1 || l >= n {
            return Err(Error::Config(format!(
                "extraction: pencil L = {l} outside 1..={} for N = {n}",
                n - 1
            )));
        }
        if self.p > l {
            return Err(Error::Config(format!(
                "extraction: p = {} exceeds pencil L = {l}",
                self.p
            )));
        }
        Ok(())
    }
}

/// Recovered modes of one channel: shared poles plus per-stream residues.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    /// Which channel the modes describe.
    pub channel: Channel,
    /// `(sigma_k, omega_k)` pairs, `omega_k >= 0`, sorted by descending mean
    /// residue magnitude across streams. May hold fewer than the requested
    /// `p` modes when the data has lower rank.
    pub poles: Vec<(f64, f64)>,
    /// `residues[i][k] = (|R|, theta)` of mode `k` in stream `i`.
    pub residues: Vec<Vec<(f64, f64)>>,
    /// Per-stream constant removed before estimation (zero with detrending
    /// disabled); added back by [`ModeSet::synthesize`].
    pub offsets: Vec<f64>,
}

impl ModeSet {
    /// Number of streams.
    pub fn n_streams(&self) -> usize {
        self.residues.len()
    }

    /// Evaluates the model on `n` samples at period `ts`.
    pub fn synthesize(&self, n: usize, ts: f64) -> DMatrix<f64> {
        let m = self.n_streams();
        let mut out = DMatrix::zeros(m, n);
        for i in 0..m {
            for t in 0..n {
                let time = t as f64 * ts;
                let mut v = self.offsets[i];
                for (k, &(sigma, omega)) in self.poles.iter().enumerate() {
                    let (mag, theta) = self.residues[i][k];
                    v += mag * (sigma * time).exp() * (omega * time + theta).cos();
                }
                out[(i, t)] = v;
            }
        }
        out
    }
}

/// Builds the stacked block-Hankel matrix of an `m x N` channel block:
/// per-stream Hankel blocks `H_i[a, b] = y_i(a + b)` of shape
/// `(N - L) x (L + 1)` are stacked vertically.
pub fn build_block_hankel(y: &DMatrix<f64>, l: usize) -> Result<DMatrix<f64>> {
    let (m, n) = (y.nrows(), y.ncols());
    if m == 0 || n == 0 {
        return Err(Error::Config("hankel: empty input".into()));
    }
    if l < 1 || l >= n {
        return Err(Error::Config(format!(
            "hankel: L = {l} outside 1..={} for N = {n}",
            n.saturating_sub(1)
        )));
    }
    let rows_per = n - l;
    let mut h = DMatrix::zeros(m * rows_per, l + 1);
    for i in 0..m {
        for a in 0..rows_per {
            for b in 0..=l {
                h[(i * rows_per + a, b)] = y[(i, a + b)];
            }
        }
    }
    Ok(h)
}

/// Estimates up to `cfg.p` modes of one channel block (`m x N`, sample
/// period `ts`). Returns fewer modes when the signal rank is lower; callers
/// zero-pad at feature-assembly time.
pub fn estimate_modes(
    y: &DMatrix<f64>,
    ts: f64,
    cfg: &ExtractionConfig,
    channel: Channel,
) -> Result<ModeSet> {
    let (m, n) = (y.nrows(), y.ncols());
    cfg.validate_for(n)?;
    if !(ts.is_finite() && ts > 0.0) {
        return Err(Error::Config(format!("sample period must be > 0, got {ts}")));
    }
    let l = cfg.pencil_len(n);

    // Detrend: the removed means are kept so reconstruction sees the
    // original signal.
    let mut yd = y.clone();
    let mut offsets = vec![0.0; m];
    if cfg.detrend {
        for i in 0..m {
            let mean = y.row(i).iter().sum::<f64>() / n as f64;
            offsets[i] = mean;
            for t in 0..n {
                yd[(i, t)] -= mean;
            }
        }
    }

    let empty = |offsets: Vec<f64>| ModeSet {
        channel,
        poles: Vec::new(),
        residues: vec![Vec::new(); m],
        offsets,
    };

    // Numerical rank of the block Hankel from its singular values; the
    // leading right singular vectors span the signal row space.
    let h = build_block_hankel(&yd, l)?;
    let n_rows = h.nrows();
    let svd = SVD::new(h, false, true);
    let v_t = svd
        .v_t
        .as_ref()
        .ok_or_else(|| Error::Numeric("hankel SVD produced no basis".into()))?;
    let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if s_max <= 0.0 {
        return Ok(empty(offsets));
    }
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > s_max * RANK_RTOL)
        .count();
    // A conjugate pair occupies two pencil dimensions, so 2p of rank covers
    // p oscillatory modes.
    let r = rank.min(2 * cfg.p).min(l).min(n_rows);
    if r == 0 {
        return Ok(empty(offsets));
    }

    // Singular values arrive sorted descending, so the first r rows of V^T
    // are the dominant directions.
    let mut vr = DMatrix::zeros(l + 1, r);
    for c in 0..r {
        vr.set_column(c, &v_t.row(c).transpose());
    }
    // Shifted pencil: rows 0..L vs rows 1..L+1 of the subspace basis differ
    // by a similarity of diag(Z_k).
    let v1 = vr.rows(0, l).into_owned();
    let v2 = vr.rows(1, l).into_owned();
    let pencil = SVD::new(v1, true, true)
        .solve(&v2, 1e-12)
        .map_err(|e| Error::Numeric(format!("pencil solve failed: {e}")))?;
    let zs = pencil.complex_eigenvalues();

    // Merge conjugate pairs: keep the non-negative-frequency member.
    let mut cands: Vec<(f64, f64)> = Vec::new();
    for z in zs.iter() {
        let mag = z.norm();
        if !(Z_MAG_MIN..=Z_MAG_MAX).contains(&mag) || z.im < 0.0 {
            continue;
        }
        let lambda = z.ln();
        cands.push((lambda.re / ts, lambda.im / ts));
    }
    if cands.is_empty() {
        return Ok(empty(offsets));
    }

    // First residue fit ranks candidates by mean magnitude across streams.
    let resid = fit_residues(&yd, ts, &cands)?;
    let mut idx: Vec<usize> = (0..cands.len()).collect();
    let mean_mag: Vec<f64> = (0..cands.len())
        .map(|k| resid.iter().map(|row| row[k].0).sum::<f64>() / m as f64)
        .collect();
    idx.sort_by(|&a, &b| {
        mean_mag[b]
            .partial_cmp(&mean_mag[a])
            .unwrap()
            .then(cands[a].1.partial_cmp(&cands[b].1).unwrap())
            .then(cands[a].0.partial_cmp(&cands[b].0).unwrap())
            .then(a.cmp(&b))
    });
    idx.truncate(cfg.p);

    let poles: Vec<(f64, f64)> = idx.iter().map(|&k| cands[k]).collect();
    let residues = if poles.len() == cands.len() {
        // Already in fit order; just permute to the ranked order.
        resid
            .iter()
            .map(|row| idx.iter().map(|&k| row[k]).collect())
            .collect()
    } else {
        // Dropped weak candidates: refit so the kept modes absorb the data.
        fit_residues(&yd, ts, &poles)?
    };

    Ok(ModeSet {
        channel,
        poles,
        residues,
        offsets,
    })
}

/// Least-squares residues for fixed modes, in the real cosine/sine basis.
/// Returns `[stream][mode] = (magnitude, angle)`.
fn fit_residues(
    yd: &DMatrix<f64>,
    ts: f64,
    modes: &[(f64, f64)],
) -> Result<Vec<Vec<(f64, f64)>>> {
    let (m, n) = (yd.nrows(), yd.ncols());
    let oscillatory: Vec<bool> = modes.iter().map(|&(_, w)| w > OMEGA_REAL_EPS).collect();
    let total_cols: usize = oscillatory.iter().map(|&o| if o { 2 } else { 1 }).sum();

    let mut basis = DMatrix::zeros(n, total_cols);
    let mut col = 0usize;
    let mut col_of = Vec::with_capacity(modes.len());
    for (k, &(sigma, omega)) in modes.iter().enumerate() {
        col_of.push(col);
        for t in 0..n {
            let time = t as f64 * ts;
            let envelope = (sigma * time).exp();
            basis[(t, col)] = envelope * (omega * time).cos();
            if oscillatory[k] {
                basis[(t, col + 1)] = envelope * (omega * time).sin();
            }
        }
        col += if oscillatory[k] { 2 } else { 1 };
    }

    // One decomposition serves all streams.
    let svd = SVD::new(basis, true, true);
    let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let rhs = yd.transpose();
    let sol = svd
        .solve(&rhs, s_max.max(1.0) * 1e-13)
        .map_err(|e| Error::Numeric(format!("residue solve failed: {e}")))?;

    let mut out = vec![Vec::with_capacity(modes.len()); m];
    for i in 0..m {
        for (k, &start) in col_of.iter().enumerate() {
            let (mag, theta) = if oscillatory[k] {
                let a = sol[(start, i)];
                let b = sol[(start + 1, i)];
                // a cos(wt) + b sin(wt) = A cos(wt + phi), phi = atan2(-b, a).
                (a.hypot(b), (-b).atan2(a))
            } else {
                let a = sol[(start, i)];
                (a.abs(), if a < 0.0 { std::f64::consts::PI } else { 0.0 })
            };
            out[i].push((mag, theta));
        }
    }
    Ok(out)
}

/// Relative L2 reconstruction error per stream: `||y_i - yhat_i|| / ||y_i||`.
/// Errors on an all-zero stream.
pub fn reconstruction_error(y: &DMatrix<f64>, modes: &ModeSet, ts: f64) -> Result<Vec<f64>> {
    if modes.n_streams() != y.nrows() {
        return Err(Error::Config(format!(
            "reconstruction: {} streams in data, {} in modes",
            y.nrows(),
            modes.n_streams()
        )));
    }
    let yhat = modes.synthesize(y.ncols(), ts);
    let mut errs = Vec::with_capacity(y.nrows());
    for i in 0..y.nrows() {
        let norm: f64 = y.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Numeric(format!(
                "reconstruction: stream {i} has zero norm"
            )));
        }
        let diff: f64 = (0..y.ncols())
            .map(|t| {
                let d = y[(i, t)] - yhat[(i, t)];
                d * d
            })
            .sum::<f64>()
            .sqrt();
        errs.push(diff / norm);
    }
    Ok(errs)
}

/// Per-channel feature block layout:
/// `[omega_1..p, sigma_1..p, (|R|_1..p, theta_1..p) x m_prime]`, zero-padded
/// when fewer than `p` modes were recovered. PMU slots are ranked by the
/// magnitude of the mode-1 residue (ties toward the lower stream index), so
/// the features are invariant to stream ordering.
pub fn assemble_features(
    mode_sets: &[ModeSet; 3],
    p: usize,
    m_prime: usize,
) -> Result<(Vec<f64>, bool)> {
    let mut values = Vec::with_capacity(feature_dim(p, m_prime));
    let mut padded = false;
    for ms in mode_sets {
        let m = ms.n_streams();
        if m_prime > m {
            return Err(Error::Config(format!(
                "m_prime = {m_prime} exceeds the {m} streams of channel {}",
                ms.channel.name()
            )));
        }
        let p_eff = ms.poles.len();
        if p_eff > p {
            return Err(Error::Config(format!(
                "mode set holds {p_eff} modes but features were requested for p = {p}"
            )));
        }
        if p_eff < p {
            padded = true;
        }
        for k in 0..p {
            values.push(if k < p_eff { ms.poles[k].1 } else { 0.0 });
        }
        for k in 0..p {
            values.push(if k < p_eff { ms.poles[k].0 } else { 0.0 });
        }
        // Rank streams by mode-1 residue magnitude, descending.
        let mut order: Vec<usize> = (0..m).collect();
        let key = |i: usize| -> f64 {
            if p_eff > 0 {
                ms.residues[i][0].0
            } else {
                0.0
            }
        };
        order.sort_by(|&a, &b| {
            key(b)
                .partial_cmp(&key(a))
                .unwrap()
                .then(a.cmp(&b))
        });
        for &i in order.iter().take(m_prime) {
            for k in 0..p {
                values.push(if k < p_eff { ms.residues[i][k].0 } else { 0.0 });
            }
            for k in 0..p {
                values.push(if k < p_eff { ms.residues[i][k].1 } else { 0.0 });
            }
        }
    }
    Ok((values, padded))
}

/// Reconstruction-error summary for one event, per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecon {
    /// Which event the row describes.
    pub event_id: String,
    /// `(mean, max)` relative reconstruction error per channel in
    /// [`Channel::ALL`] order.
    pub channel_err: [(f64, f64); 3],
    /// True when any channel yielded fewer than `p` modes.
    pub padded: bool,
}

/// Runs modal estimation on every event (in parallel) and assembles the
/// feature table plus per-event reconstruction summaries. Events must each
/// have at least `m_prime` PMUs.
pub fn extract_features(
    records: &[EventRecord],
    cfg: &ExtractionConfig,
) -> Result<(FeatureDataset, Vec<EventRecon>)> {
    use rayon::prelude::*;

    if records.is_empty() {
        return Err(Error::Config("extract: no events".into()));
    }
    for rec in records {
        if rec.m < cfg.m_prime {
            return Err(Error::Config(format!(
                "event {}: m = {} is smaller than m_prime = {}",
                rec.event_id, rec.m, cfg.m_prime
            )));
        }
        cfg.validate_for(rec.n_samples())?;
    }

    let rows: Vec<(Vec<f64>, EventRecon)> = records
        .par_iter()
        .map(|rec| -> Result<(Vec<f64>, EventRecon)> {
            let ts = rec.sample_period();
            let mut sets = Vec::with_capacity(3);
            let mut channel_err = [(0.0, 0.0); 3];
            for (ci, ch) in Channel::ALL.into_iter().enumerate() {
                let block = rec.channel(ch);
                let ms = estimate_modes(&block, ts, cfg, ch)?;
                let errs = reconstruction_error(&block, &ms, ts)?;
                let mean = errs.iter().sum::<f64>() / errs.len() as f64;
                let max = errs.iter().cloned().fold(0.0, f64::max);
                channel_err[ci] = (mean, max);
                sets.push(ms);
            }
            let sets: [ModeSet; 3] = sets.try_into().expect("three channels");
            let (values, padded) = assemble_features(&sets, cfg.p, cfg.m_prime)?;
            Ok((
                values,
                EventRecon {
                    event_id: rec.event_id.clone(),
                    channel_err,
                    padded,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let d = feature_dim(cfg.p, cfg.m_prime);
    let mut x = DMatrix::zeros(records.len(), d);
    let mut recon = Vec::with_capacity(records.len());
    for (i, (values, r)) in rows.into_iter().enumerate() {
        for (j, v) in values.into_iter().enumerate() {
            x[(i, j)] = v;
        }
        recon.push(r);
    }
    let event_ids: Vec<String> = records.iter().map(|r| r.event_id.clone()).collect();
    let labels: Vec<i32> = records
        .iter()
        .map(|r| r.class.map_or(crate::dataset::UNLABELED, |c| c.code()))
        .collect();
    let features = FeatureDataset::new(event_ids, labels, x, cfg.p, cfg.m_prime)?;
    Ok((features, recon))
}
