//! Top-level run configuration: one JSON document holding the generator
//! settings, the class signatures, the extraction settings, and the
//! experiment plan.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{EventClass, ExperimentPlan};
use crate::modal::ExtractionConfig;
use crate::synth::{default_signatures, ClassSignature, GeneratorConfig};
use crate::{Error, Result};

/// Everything a full pipeline run needs. Every section except `plan` is
/// optional and falls back to its defaults, as do missing keys inside a
/// section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Synthetic-data generator settings.
    #[serde(default)]
    pub generator: GeneratorConfig,
    /// Per-class signal signatures (default: the built-in four).
    #[serde(default = "default_signatures")]
    pub signatures: Vec<ClassSignature>,
    /// Modal feature-extraction settings.
    #[serde(default)]
    pub extraction: ExtractionConfig,
    /// Robustness-protocol parameters.
    pub plan: ExperimentPlan,
}

impl RunConfig {
    /// Parses and validates a configuration document.
    pub fn from_json(json: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            serde_json::from_str(json).map_err(|e| Error::Config(format!("run config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a configuration file.
    pub fn from_path(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks every section plus their interactions (the extraction window
    /// must fit the generated recordings; the plan must be runnable on the
    /// generated event count).
    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        for class in EventClass::ALL {
            let hits = self
                .signatures
                .iter()
                .filter(|s| s.class == class)
                .count();
            if hits == 0 {
                return Err(Error::Config(format!(
                    "signatures are missing class {}",
                    class.name()
                )));
            }
            if hits > 1 {
                return Err(Error::Config(format!(
                    "class {} has {hits} signatures; give exactly one",
                    class.name()
                )));
            }
        }
        self.extraction.validate_for(self.generator.n_samples())?;
        self.plan.validate()?;
        self.plan
            .validate_with_data(self.generator.counts.iter().sum())?;
        Ok(())
    }

    /// Serializes the effective (post-default) configuration; the CLI echoes
    /// this next to each output so a run documents what it actually used.
    pub fn to_pretty_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("run config serialization: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> &'static str {
        r#"{
            "plan": {
                "n_K": 5, "n_Q": 2, "n_L": 24, "delta_U": 50, "n_R": 3,
                "B_min": 0.2, "B_max": 0.8, "master_seed": 42
            }
        }"#
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::from_json(minimal_json()).unwrap();
        assert_eq!(cfg.generator.m, 12);
        assert_eq!(cfg.generator.counts, [500, 500, 500, 327]);
        assert_eq!(cfg.signatures.len(), 4);
        assert_eq!(cfg.extraction.p, 6);
        assert_eq!(cfg.plan.n_k, 5);
    }

    #[test]
    fn missing_plan_is_named() {
        let err = RunConfig::from_json(r#"{"generator": {}}"#).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("plan"), "{err}");
    }

    #[test]
    fn effective_echo_round_trips() {
        let cfg = RunConfig::from_json(minimal_json()).unwrap();
        let echoed = cfg.to_pretty_json().unwrap();
        let back = RunConfig::from_json(&echoed).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn cross_section_checks_fire() {
        // Extraction window cannot exceed the recording length.
        let mut cfg = RunConfig::from_json(minimal_json()).unwrap();
        cfg.generator.duration_s = 0.2; // 6 samples, pencil is too short for p = 6
        assert!(cfg.validate().is_err());

        // The plan must fit the generated event count.
        let mut cfg = RunConfig::from_json(minimal_json()).unwrap();
        cfg.generator.counts = [3, 3, 3, 3];
        let err = cfg.validate().unwrap_err();
        assert!(err.is_config(), "{err}");
    }

    #[test]
    fn duplicate_or_missing_signature_class_is_rejected() {
        let mut cfg = RunConfig::from_json(minimal_json()).unwrap();
        let dup = cfg.signatures[0].clone();
        cfg.signatures.push(dup);
        assert!(cfg.validate().unwrap_err().to_string().contains("exactly one"));

        let mut cfg = RunConfig::from_json(minimal_json()).unwrap();
        cfg.signatures.retain(|s| s.class != EventClass::BF);
        assert!(cfg.validate().unwrap_err().to_string().contains("BF"));
    }
}
