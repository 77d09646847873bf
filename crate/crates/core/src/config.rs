//! Run configuration file.

use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiment::CorrelationMethod;
use crate::pulse::CalibrationTable;
use crate::qutrit::Amplitudes;
use crate::rays::{measurement_ray_set, Ray, RayError, CANONICAL_LABELS};
use crate::readout::{FluorescenceModel, NoiseConfig};

/// Explicit vectors must have unit norm to within this.
pub const UNIT_NORM_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config")]
    Io(#[from] std::io::Error),
    #[error("invalid config")]
    Parse(#[from] serde_json::Error),
    #[error("unknown ray label {0:?}")]
    UnknownLabel(String),
    #[error("vector {0} does not have unit norm (norm {1})")]
    NotUnit(String, f64),
    #[error(transparent)]
    Ray(#[from] RayError),
    #[error("invalid setting: {0}")]
    Invalid(String),
}

/// A vector component, either real or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Component {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Component> for Complex64 {
    fn from(c: Component) -> Self {
        match c {
            Component::Real(re) => Complex64::new(re, 0.0),
            Component::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// A prepared state given by label or by explicit components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateEntry {
    Label(String),
    Vector([Component; 3]),
}

impl StateEntry {
    pub fn resolve(&self, fallback_label: &str) -> Result<Ray, ConfigError> {
        match self {
            StateEntry::Label(label) => measurement_ray_set()
                .into_iter()
                .find(|r| r.label() == label)
                .ok_or_else(|| ConfigError::UnknownLabel(label.clone())),
            StateEntry::Vector(v) => {
                let amps = Amplitudes::new(v[0].into(), v[1].into(), v[2].into());
                let norm = amps.norm();
                if (norm - 1.0).abs() > UNIT_NORM_TOL {
                    return Err(ConfigError::NotUnit(fallback_label.to_string(), norm));
                }
                Ok(Ray::new(fallback_label, amps)?)
            }
        }
    }
}

/// Parses a ray argument: a label, or a JSON vector such as
/// `[0.6, 0, 0.8]` or `[[0.6,0],[0,0.8],[0,0]]`.
pub fn parse_ray(arg: &str) -> Result<Ray, ConfigError> {
    let trimmed = arg.trim();
    let entry = if trimmed.starts_with('[') {
        StateEntry::Vector(serde_json::from_str(trimmed)?)
    } else {
        StateEntry::Label(trimmed.to_string())
    };
    entry.resolve("custom")
}

fn default_states() -> Vec<StateEntry> {
    CANONICAL_LABELS
        .iter()
        .map(|l| StateEntry::Label(l.to_string()))
        .collect()
}

/// Contents of the run-config JSON. Every key is optional; unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub shots: u64,
    pub noiseless: bool,
    pub states: Vec<StateEntry>,
    pub correlation_method: CorrelationMethod,
    pub depolarizing_p: f64,
    pub pulse_amp_error: f64,
    pub cache_conditionals: bool,
    pub parallel: bool,
    pub calibration: CalibrationTable,
    pub fluorescence: FluorescenceModel,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let noise = NoiseConfig::default();
        Self {
            seed: noise.seed,
            shots: noise.shots,
            noiseless: noise.noiseless,
            states: default_states(),
            correlation_method: CorrelationMethod::Joint,
            depolarizing_p: noise.depolarizing_p,
            pulse_amp_error: noise.pulse_amp_error,
            cache_conditionals: true,
            parallel: true,
            calibration: CalibrationTable::default(),
            fluorescence: FluorescenceModel::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn noise(&self) -> NoiseConfig {
        NoiseConfig {
            shots: self.shots,
            seed: self.seed,
            depolarizing_p: self.depolarizing_p,
            pulse_amp_error: self.pulse_amp_error,
            noiseless: self.noiseless,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.noise().validate().map_err(|e| invalid(&e))?;
        self.fluorescence.validate().map_err(|e| invalid(&e))?;
        self.calibration.validate().map_err(|e| invalid(&e))?;
        if self.states.is_empty() {
            return Err(ConfigError::Invalid("states must not be empty".into()));
        }
        self.resolve_states()?;
        Ok(())
    }

    /// Explicit vectors are labeled `v1`, `v2`, … by position.
    pub fn resolve_states(&self) -> Result<Vec<Ray>, ConfigError> {
        self.states
            .iter()
            .enumerate()
            .map(|(i, s)| s.resolve(&format!("v{}", i + 1)))
            .collect()
    }
}
