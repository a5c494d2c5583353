//! Experiment configuration: one TOML document with the sections `model`,
//! `bath`, `run`, `rate_function`, `observables` and `output`.
//!
//! Every section is optional and falls back to the reference quench
//! parameters. Unknown keys are rejected. All values are in units of the
//! bath frequency Ω.

use std::fmt;
use std::path::{Path, PathBuf};

use dqpt_core::bathrates::BathParams;
use dqpt_core::model::ModelParams;
use dqpt_core::observables::{Denominator, MagnetizationSites, ProbeConfig};
use dqpt_core::spinops::DEFAULT_MAX_SITES;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CliError, Result};

/// Largest number of significant digits that distinguishes every f64.
pub const MAX_PRECISION: usize = 17;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub n_a: usize,
    pub n_b: usize,
    pub tau: f64,
    pub field: f64,
    pub nu: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let r = ModelParams::REFERENCE;
        ModelSection { n_a: r.n_a, n_b: r.n_b, tau: r.tau, field: r.field, nu: r.nu }
    }
}

/// Inverse temperature; written as a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beta(pub f64);

impl Default for Beta {
    fn default() -> Self {
        Beta(f64::INFINITY)
    }
}

impl Serialize for Beta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Beta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct BetaVisitor;

        impl Visitor<'_> for BetaVisitor {
            type Value = Beta;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive number or \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Beta, E> {
                Ok(Beta(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Beta, E> {
                Ok(Beta(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Beta, E> {
                Ok(Beta(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Beta, E> {
                match v {
                    "inf" | "infinity" => Ok(Beta(f64::INFINITY)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }

        d.deserialize_any(BetaVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathSection {
    pub gamma0: f64,
    pub h: f64,
    pub z: f64,
    pub modes: usize,
    pub beta: Beta,
}

impl Default for BathSection {
    fn default() -> Self {
        let b = BathParams::default();
        BathSection { gamma0: b.gamma0, h: b.h, z: b.z, modes: b.modes, beta: Beta(b.beta) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineChoice {
    #[default]
    Exact,
    Lindblad,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub engine: EngineChoice,
    pub periods: usize,
    pub samples_per_period: usize,
    pub rk4_steps_per_sample: usize,
    /// The minimum eigenvalue of ρ is checked every this many samples.
    pub min_eig_every: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            engine: EngineChoice::Exact,
            periods: 1,
            samples_per_period: 2000,
            rk4_steps_per_sample: 10,
            min_eig_every: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DenominatorChoice {
    #[default]
    #[serde(rename = "total")]
    Total,
    #[serde(rename = "chain_A")]
    ChainA,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateFunctionSection {
    pub denominator: DenominatorChoice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MagnetizationChoice {
    #[default]
    #[serde(rename = "chain_A")]
    ChainA,
    #[serde(rename = "ring")]
    Ring,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservablesSection {
    pub magnetization: MagnetizationChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Output directory.
    pub path: PathBuf,
    /// Significant digits of every float in the CSV.
    pub precision: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { path: PathBuf::from("out"), precision: 12 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub bath: BathSection,
    pub run: RunSection,
    pub rate_function: RateFunctionSection,
    pub observables: ObservablesSection,
    pub output: OutputSection,
}

fn schema_error<E: fmt::Display>(err: serde_path_to_error::Error<E>) -> CliError {
    let path = err.path().to_string();
    let key = if path == "." { "<root>".to_string() } else { path };
    CliError::config(key, err.into_inner().to_string())
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| CliError::config("<root>", e.to_string()))?;
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(schema_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads the configuration echoed in a run manifest.
    pub fn from_manifest_str(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::config("<root>", e.to_string()))?;
        let config = value.get("config").ok_or_else(|| CliError::config("config", "missing from manifest"))?;
        Self::from_json_value(config)
    }

    pub fn from_json_value(value: &serde_json::Value) -> Result<Self> {
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(schema_error)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a TOML config, or the echoed config of a `.json` manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_manifest_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::config("<root>", e.to_string()))
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes to JSON")
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.n_a < 2 {
            return Err(CliError::config("model.n_a", "must be at least 2"));
        }
        if m.n_b < 2 {
            return Err(CliError::config("model.n_b", "must be at least 2"));
        }
        if m.n_a + m.n_b > DEFAULT_MAX_SITES {
            return Err(CliError::config(
                "model",
                format!("n_a + n_b = {} exceeds the maximum of {DEFAULT_MAX_SITES} sites", m.n_a + m.n_b),
            ));
        }
        for (key, v) in [("model.tau", m.tau), ("model.field", m.field), ("model.nu", m.nu)] {
            if !v.is_finite() {
                return Err(CliError::config(key, "must be finite"));
            }
        }
        if let Err(dqpt_core::Error::InvalidParameter { name, reason }) = self.bath_params().validate() {
            return Err(CliError::config(format!("bath.{name}"), reason));
        }
        let r = &self.run;
        for (key, v) in [
            ("run.periods", r.periods),
            ("run.samples_per_period", r.samples_per_period),
            ("run.rk4_steps_per_sample", r.rk4_steps_per_sample),
            ("run.min_eig_every", r.min_eig_every),
        ] {
            if v == 0 {
                return Err(CliError::config(key, "must be a positive integer"));
            }
        }
        if !(1..=MAX_PRECISION).contains(&self.output.precision) {
            return Err(CliError::config("output.precision", format!("must lie in 1..={MAX_PRECISION}")));
        }
        Ok(())
    }

    pub fn model_params(&self) -> ModelParams {
        let m = &self.model;
        ModelParams { n_a: m.n_a, n_b: m.n_b, tau: m.tau, field: m.field, nu: m.nu }
    }

    pub fn bath_params(&self) -> BathParams {
        let b = &self.bath;
        BathParams { gamma0: b.gamma0, h: b.h, z: b.z, modes: b.modes, beta: b.beta.0, ..BathParams::default() }
    }

    pub fn probe_config(&self) -> ProbeConfig {
        ProbeConfig {
            denominator: match self.rate_function.denominator {
                DenominatorChoice::Total => Denominator::Total,
                DenominatorChoice::ChainA => Denominator::ChainA,
            },
            magnetization: match self.observables.magnetization {
                MagnetizationChoice::ChainA => MagnetizationSites::ChainA,
                MagnetizationChoice::Ring => MagnetizationSites::Ring,
            },
        }
    }

    /// Sample times `k T / S` for `k = 0..=periods·S`, in units of Ω⁻¹.
    pub fn sample_times(&self) -> Vec<f64> {
        let period = self.bath_params().period();
        let s = self.run.samples_per_period;
        (0..=self.run.periods * s).map(|k| k as f64 * period / s as f64).collect()
    }

    /// Copy with the numeric entry at the dotted `axis` replaced by `value`.
    pub fn with_axis(&self, axis: &str, value: f64) -> Result<Self> {
        let mut doc = self.to_json_value();
        let mut slot = &mut doc;
        for part in axis.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(part))
                .ok_or_else(|| CliError::config(axis, "no such config key"))?;
        }
        let is_beta_inf = slot.as_str() == Some("inf");
        if !slot.is_number() && !is_beta_inf {
            return Err(CliError::config(axis, "is not a numeric config key"));
        }
        *slot = if slot.is_u64() {
            if value < 0.0 || value.fract() != 0.0 || value > u64::MAX as f64 {
                return Err(CliError::config(axis, format!("expects a nonnegative integer, got {value}")));
            }
            serde_json::Value::from(value as u64)
        } else if value == f64::INFINITY && (is_beta_inf || axis == "bath.beta") {
            serde_json::Value::from("inf")
        } else {
            serde_json::Number::from_f64(value)
                .map(serde_json::Value::Number)
                .ok_or_else(|| CliError::config(axis, format!("value {value} is not finite")))?
        };
        Self::from_json_value(&doc)
    }
}
