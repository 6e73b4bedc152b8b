//! Synthetic eventful synchrophasor recordings.
//!
//! Each event class is described by a [`ClassSignature`]: a set of damped
//! modes with per-channel residue scales, plus an optional rectangular
//! voltage-magnitude dip covering the faulted interval `[0, t_clr)`. An
//! event draws its mode parameters once and shares them across channels and
//! PMUs — only residue magnitudes and phases vary per stream — so the
//! generated data obeys the same shared-pole model the estimator assumes.
//!
//! Event texture in brief:
//! - load-loss and generation-loss events carry a non-oscillatory settling
//!   mode whose sign (frequency excursion up vs. down) separates the two,
//!   plus a low-frequency inter-area swing;
//! - line-trip events carry a strongly localized 0.5–1.5 Hz oscillation and
//!   an angle-redistribution settling term;
//! - bus-fault events begin with a rectangular voltage dip until fault
//!   clearing, followed by heavily damped 1–3 Hz oscillations.
//!
//! Everything is reproducible: an event's stream of random draws is fixed
//! by `(master seed, class code, event index)` and the draw order is part
//! of the contract of [`generate_event`].

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{Channel, EventClass, EventRecord};
use crate::seed::{derive_seed, rng_from};
use crate::{Error, Result};

/// Phase jitter (radians) applied per PMU to oscillatory modes.
const THETA_JITTER: f64 = 0.3;
/// Scale of the per-stream offset jitter around the channel base offset.
const OFFSET_JITTER: f64 = 0.005;

/// One mode of a class signature. Ranges are sampled uniformly per event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    /// Frequency range in Hz; `(0, 0)` declares a non-oscillatory settling
    /// mode whose residue sign is taken from `scale`.
    pub freq_hz: (f64, f64),
    /// Damping range in 1/s (negative for decay).
    pub damping: (f64, f64),
    /// Signed residue scale per channel in [`Channel::ALL`] order
    /// (`V_m`, `V_a`, `F`); zero removes the mode from a channel.
    pub scale: [f64; 3],
}

impl ModeSpec {
    /// True when the mode settles without oscillating.
    pub fn is_settle(&self) -> bool {
        self.freq_hz.0 == 0.0 && self.freq_hz.1 == 0.0
    }
}

/// Everything that distinguishes one event class from another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSignature {
    /// Class the signature describes.
    pub class: EventClass,
    /// Modes excited by the event.
    pub modes: Vec<ModeSpec>,
    /// Channel base offsets (`V_m`, `V_a`, `F`).
    pub offset_base: [f64; 3],
    /// Depth of the rectangular `V_m` dip during `[0, t_clr)`; zero disables.
    pub dip_depth_vm: f64,
    /// Spatial decay rate of residue magnitude with distance from the
    /// event's (random) epicenter; larger means more localized.
    pub spatial_decay: f64,
}

/// Knobs shared by all generated events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// PMUs per event.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Samples per second.
    #[serde(default = "default_rate")]
    pub sample_rate_hz: f64,
    /// Recording length in seconds.
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    /// Measurement SNR in dB; `null` disables noise entirely.
    #[serde(default = "default_snr")]
    pub snr_db: Option<f64>,
    /// Fault-clearing time bounding the `V_m` dip.
    #[serde(default = "default_t_clr")]
    pub t_clr: f64,
    /// Per-event load factor range multiplying all residues.
    #[serde(default = "default_load")]
    pub load_scale: (f64, f64),
    /// Per-stream residue fluctuation half-width (relative).
    #[serde(default = "default_fluct")]
    pub fluctuation: f64,
    /// Events per class in class-code order (LL, GL, LT, BF).
    #[serde(default = "default_counts")]
    pub counts: [usize; 4],
}

fn default_m() -> usize {
    12
}
fn default_rate() -> f64 {
    30.0
}
fn default_duration() -> f64 {
    10.0
}
fn default_snr() -> Option<f64> {
    Some(45.0)
}
fn default_t_clr() -> f64 {
    0.1
}
fn default_load() -> (f64, f64) {
    (0.95, 1.05)
}
fn default_fluct() -> f64 {
    0.02
}
fn default_counts() -> [usize; 4] {
    [500, 500, 500, 327]
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            m: default_m(),
            sample_rate_hz: default_rate(),
            duration_s: default_duration(),
            snr_db: default_snr(),
            t_clr: default_t_clr(),
            load_scale: default_load(),
            fluctuation: default_fluct(),
            counts: default_counts(),
        }
    }
}

impl GeneratorConfig {
    /// Samples per recording.
    pub fn n_samples(&self) -> usize {
        (self.sample_rate_hz * self.duration_s).round() as usize
    }

    /// Checks ranges and counts.
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("generator: m must be >= 1".into()));
        }
        if !(self.sample_rate_hz > 0.0 && self.duration_s > 0.0) {
            return Err(Error::Config(
                "generator: sample rate and duration must be > 0".into(),
            ));
        }
        if self.n_samples() < 2 {
            return Err(Error::Config("generator: fewer than 2 samples".into()));
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(Error::Config("generator: snr_db must be finite".into()));
            }
        }
        if !(self.load_scale.0 > 0.0 && self.load_scale.1 >= self.load_scale.0) {
            return Err(Error::Config("generator: bad load_scale range".into()));
        }
        if !(0.0..1.0).contains(&self.fluctuation) {
            return Err(Error::Config(
                "generator: fluctuation must be in [0, 1)".into(),
            ));
        }
        if self.t_clr < 0.0 {
            return Err(Error::Config("generator: t_clr must be >= 0".into()));
        }
        if self.counts.iter().sum::<usize>() == 0 {
            return Err(Error::Config("generator: zero events requested".into()));
        }
        Ok(())
    }
}

/// Built-in signatures for the four event classes.
///
/// Load loss and generation loss share their oscillatory content and differ
/// by the sign of the settling mode (frequency excursion up vs. down), so
/// separating them requires the phase features. Line trips are localized
/// mid-band oscillations; bus faults pair a clearing-time voltage dip with
/// fast, heavily damped oscillations. The per-class frequency and damping
/// ranges overlap deliberately: no single band identifies a class, so
/// classification has to combine mode geometry with the residue pattern.
pub fn default_signatures() -> Vec<ClassSignature> {
    vec![
        ClassSignature {
            class: EventClass::LL,
            modes: vec![
                ModeSpec {
                    freq_hz: (0.0, 0.0),
                    damping: (-0.55, -0.15),
                    scale: [0.008, 0.05, 0.06],
                },
                ModeSpec {
                    freq_hz: (0.2, 1.2),
                    damping: (-0.5, -0.1),
                    scale: [0.004, 0.12, 0.03],
                },
                ModeSpec {
                    freq_hz: (0.8, 2.2),
                    damping: (-1.0, -0.3),
                    scale: [0.002, 0.04, 0.008],
                },
            ],
            offset_base: [1.0, 0.0, 60.0],
            dip_depth_vm: 0.0,
            spatial_decay: 0.8,
        },
        ClassSignature {
            class: EventClass::GL,
            modes: vec![
                ModeSpec {
                    freq_hz: (0.0, 0.0),
                    damping: (-0.55, -0.15),
                    scale: [-0.008, -0.05, -0.06],
                },
                ModeSpec {
                    freq_hz: (0.2, 1.2),
                    damping: (-0.5, -0.1),
                    scale: [0.004, 0.12, 0.03],
                },
                ModeSpec {
                    freq_hz: (0.8, 2.2),
                    damping: (-1.0, -0.3),
                    scale: [0.002, 0.04, 0.008],
                },
            ],
            offset_base: [1.0, 0.0, 60.0],
            dip_depth_vm: 0.0,
            spatial_decay: 0.8,
        },
        ClassSignature {
            class: EventClass::LT,
            modes: vec![
                ModeSpec {
                    freq_hz: (0.3, 1.8),
                    damping: (-0.9, -0.2),
                    scale: [0.006, 0.15, 0.02],
                },
                ModeSpec {
                    freq_hz: (0.0, 0.0),
                    damping: (-1.2, -0.5),
                    scale: [0.0, 0.08, 0.0],
                },
            ],
            offset_base: [1.0, 0.0, 60.0],
            dip_depth_vm: 0.0,
            spatial_decay: 2.5,
        },
        ClassSignature {
            class: EventClass::BF,
            modes: vec![
                ModeSpec {
                    freq_hz: (0.8, 2.8),
                    damping: (-2.5, -0.8),
                    scale: [0.010, 0.10, 0.015],
                },
                ModeSpec {
                    freq_hz: (0.5, 1.8),
                    damping: (-1.5, -0.5),
                    scale: [0.004, 0.05, 0.008],
                },
            ],
            offset_base: [1.0, 0.0, 60.0],
            dip_depth_vm: 0.08,
            spatial_decay: 1.5,
        },
    ]
}

/// Looks up the signature for `class` in `sigs`.
fn signature_for(sigs: &[ClassSignature], class: EventClass) -> Result<&ClassSignature> {
    sigs.iter()
        .find(|s| s.class == class)
        .ok_or_else(|| Error::Config(format!("no signature for class {}", class.name())))
}

/// Generates one event. The random draws happen in a fixed, documented
/// order so that a given `(seed, index)` always produces identical data:
///
/// 1. load factor;
/// 2. per mode: damping, then frequency (skipped for settling modes);
/// 3. per PMU: epicenter distance;
/// 4. per mode x channel: base phase (skipped for settling modes);
/// 5. per mode x channel x PMU: relative fluctuation, then phase jitter
///    (jitter skipped for settling modes);
/// 6. per stream: offset jitter;
/// 7. per stream x sample: measurement noise (skipped when `snr_db` is
///    `null`).
///
/// The record's metadata holds the exact ground truth: offsets, per-stream
/// residues `(magnitude, theta)`, pole pairs, distances, and the dip.
pub fn generate_event(
    sig: &ClassSignature,
    cfg: &GeneratorConfig,
    index: usize,
    master_seed: u64,
) -> Result<EventRecord> {
    cfg.validate()?;
    let class = sig.class;
    let seed = derive_seed(master_seed, &[class.code() as u64, index as u64]);
    let mut rng = rng_from(seed);

    let m = cfg.m;
    let n = cfg.n_samples();
    let ts = 1.0 / cfg.sample_rate_hz;
    let n_modes = sig.modes.len();

    // 1. Load factor.
    let load = if cfg.load_scale.0 == cfg.load_scale.1 {
        cfg.load_scale.0
    } else {
        rng.gen_range(cfg.load_scale.0..cfg.load_scale.1)
    };

    // 2. Shared pole draw per mode.
    let mut poles = Vec::with_capacity(n_modes);
    for spec in &sig.modes {
        let sigma = if spec.damping.0 == spec.damping.1 {
            spec.damping.0
        } else {
            rng.gen_range(spec.damping.0..spec.damping.1)
        };
        let omega = if spec.is_settle() {
            0.0
        } else {
            2.0 * std::f64::consts::PI * rng.gen_range(spec.freq_hz.0..spec.freq_hz.1)
        };
        poles.push((sigma, omega));
    }

    // 3. Epicenter distances.
    let distances: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();

    // 4. Base phases per mode x channel.
    let mut theta_base = vec![[0.0f64; 3]; n_modes];
    for (k, spec) in sig.modes.iter().enumerate() {
        for c in 0..3 {
            if !spec.is_settle() {
                theta_base[k][c] =
                    rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            }
        }
    }

    // 5. Per-stream residues: magnitude fluctuation and phase jitter.
    // residue[k][c][i] = (magnitude, theta).
    let mut residue = vec![vec![vec![(0.0f64, 0.0f64); m]; 3]; n_modes];
    for (k, spec) in sig.modes.iter().enumerate() {
        for c in 0..3 {
            for i in 0..m {
                let fluct = if cfg.fluctuation > 0.0 {
                    rng.gen_range(-cfg.fluctuation..cfg.fluctuation)
                } else {
                    0.0
                };
                let jitter = if spec.is_settle() {
                    0.0
                } else {
                    rng.gen_range(-THETA_JITTER..THETA_JITTER)
                };
                let scale = spec.scale[c];
                let mag = scale.abs()
                    * load
                    * (1.0 + fluct)
                    * (-sig.spatial_decay * distances[i]).exp();
                let theta = if spec.is_settle() {
                    if scale < 0.0 {
                        std::f64::consts::PI
                    } else {
                        0.0
                    }
                } else {
                    theta_base[k][c] + jitter
                };
                residue[k][c][i] = if scale == 0.0 { (0.0, 0.0) } else { (mag, theta) };
            }
        }
    }

    // 6. Per-stream offsets.
    let mut offsets = vec![[0.0f64; 3]; m];
    for stream in offsets.iter_mut() {
        for (c, slot) in stream.iter_mut().enumerate() {
            *slot = sig.offset_base[c] + rng.gen_range(-OFFSET_JITTER..OFFSET_JITTER);
        }
    }

    // Noiseless synthesis: offsets + modal sum, plus the rectangular dip on
    // V_m before fault clearing.
    let dip_samples = if sig.dip_depth_vm > 0.0 {
        ((cfg.t_clr * cfg.sample_rate_hz).ceil() as usize).min(n)
    } else {
        0
    };
    let dip_depth: Vec<f64> = (0..m)
        .map(|i| sig.dip_depth_vm * load * (-sig.spatial_decay * distances[i]).exp())
        .collect();

    let mut data = DMatrix::zeros(3 * m, n);
    for c in 0..3 {
        for i in 0..m {
            let row = c * m + i;
            for t in 0..n {
                let time = t as f64 * ts;
                let mut v = offsets[i][c];
                for k in 0..n_modes {
                    let (mag, theta) = residue[k][c][i];
                    if mag == 0.0 {
                        continue;
                    }
                    let (sigma, omega) = poles[k];
                    v += mag * (sigma * time).exp() * (omega * time + theta).cos();
                }
                if c == 0 && t < dip_samples {
                    v -= dip_depth[i];
                }
                data[(row, t)] = v;
            }
        }
    }

    // 7. Measurement noise scaled per stream from the dynamic content.
    if let Some(snr) = cfg.snr_db {
        let gain = 10f64.powf(-snr / 20.0);
        for c in 0..3 {
            for i in 0..m {
                let row = c * m + i;
                let mean = data.row(row).iter().sum::<f64>() / n as f64;
                let var = data
                    .row(row)
                    .iter()
                    .map(|v| (v - mean) * (v - mean))
                    .sum::<f64>()
                    / n as f64;
                let noise_std = var.sqrt() * gain;
                for t in 0..n {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    data[(row, t)] += noise_std * z;
                }
            }
        }
    }

    // Ground truth for oracle tests, keyed by channel tag.
    let tags: Vec<&str> = Channel::ALL.iter().map(|c| c.tag()).collect();
    let modes_meta: Vec<serde_json::Value> = (0..n_modes)
        .map(|k| {
            let mut mags = serde_json::Map::new();
            let mut thetas = serde_json::Map::new();
            for (c, tag) in tags.iter().enumerate() {
                mags.insert(
                    tag.to_string(),
                    json!((0..m).map(|i| residue[k][c][i].0).collect::<Vec<_>>()),
                );
                thetas.insert(
                    tag.to_string(),
                    json!((0..m).map(|i| residue[k][c][i].1).collect::<Vec<_>>()),
                );
            }
            json!({
                "sigma": poles[k].0,
                "omega": poles[k].1,
                "mag": mags,
                "theta": thetas,
            })
        })
        .collect();
    let mut offsets_meta = serde_json::Map::new();
    for (c, tag) in tags.iter().enumerate() {
        offsets_meta.insert(
            tag.to_string(),
            json!((0..m).map(|i| offsets[i][c]).collect::<Vec<_>>()),
        );
    }
    let mut meta = std::collections::BTreeMap::new();
    meta.insert("load".to_string(), json!(load));
    meta.insert("distances".to_string(), json!(distances));
    meta.insert("offsets".to_string(), serde_json::Value::Object(offsets_meta));
    meta.insert("modes".to_string(), json!(modes_meta));
    if dip_samples > 0 {
        meta.insert(
            "dip".to_string(),
            json!({ "depth": dip_depth, "n_samples": dip_samples }),
        );
    }

    let event_id = format!("{}_{:05}", class.name(), index);
    EventRecord::new(event_id, Some(class), cfg.sample_rate_hz, m, data, meta)
}

/// Generates the full labeled corpus: `counts[c]` events per class, then a
/// deterministic master shuffle of the row order. Event ids stay tied to
/// `(class, index)` so the shuffle only permutes positions.
pub fn generate_dataset(
    cfg: &GeneratorConfig,
    sigs: &[ClassSignature],
    master_seed: u64,
) -> Result<Vec<EventRecord>> {
    use rand::seq::SliceRandom;

    cfg.validate()?;
    let mut records = Vec::with_capacity(cfg.counts.iter().sum());
    for (ci, &class) in EventClass::ALL.iter().enumerate() {
        let sig = signature_for(sigs, class)?;
        for index in 0..cfg.counts[ci] {
            records.push(generate_event(sig, cfg, index, master_seed)?);
        }
    }
    let mut shuffle_rng = rng_from(derive_seed(master_seed, &[0]));
    records.shuffle(&mut shuffle_rng);
    Ok(records)
}
