//! Strict JSON experiment configuration.
//!
//! Every section is optional and every missing key takes its default. Unknown
//! keys are rejected. Errors carry the dotted key path they refer to.

use std::path::Path;

use lgqa::experiments::{default_tau_grid, Dynamics, ExperimentConfig, Mode, DEFAULT_MASTER_SEED};
use lgqa::{AnnealSchedule, BathParams, IntegratorConfig, MeasurementParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{key}: {message}")]
    Range { key: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub n_traj: usize,
    pub master_seed: u64,
    /// Defaults to 15 points over `[0, t_f/2]`.
    pub tau_grid: Option<Vec<f64>>,
    pub mode: Mode,
    pub dynamics: Dynamics,
    pub frozen_s: Option<f64>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            n_traj: 100_000,
            master_seed: DEFAULT_MASTER_SEED,
            tau_grid: None,
            mode: Mode::Weak,
            dynamics: Dynamics::Quantum,
            frozen_s: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalSection {
    /// Damping override; `π·α` when absent.
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub d_grid: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            d_grid: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub anneal: AnnealSchedule,
    pub bath: BathParams,
    pub measurement: MeasurementParams,
    pub integrator: IntegratorConfig,
    pub experiment: ExperimentSection,
    pub classical: ClassicalSection,
    pub sweep: SweepSection,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::Parse {
                path: if path == "." { "<root>".into() } else { path },
                message: e.into_inner().to_string(),
            }
        })?;
        cfg.resolved()
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Materializes defaults that depend on other fields, then validates.
    pub fn resolved(mut self) -> Result<Self, ConfigError> {
        if self.experiment.tau_grid.is_none() {
            self.experiment.tau_grid = Some(default_tau_grid(self.anneal.t_f, 15));
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        scoped("anneal", self.anneal.validate())?;
        scoped("bath", self.bath.validate())?;
        scoped("measurement", self.measurement.validate())?;
        scoped("integrator", self.integrator.validate(self.anneal.t_f))?;
        let ec = self.experiment_config();
        match ec.validate() {
            Err(lgqa::Error::InvalidParameter { name: "eta", value, reason }) => {
                return Err(range("classical.eta", value, reason))
            }
            other => scoped("experiment", other)?,
        }
        for &d in &self.sweep.d_grid {
            if !(d > 0.0 && d.is_finite()) {
                return Err(range("sweep.d_grid", d, "every D must be positive and finite"));
            }
        }
        Ok(())
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            sched: self.anneal,
            bath: self.bath,
            measurement: self.measurement,
            integrator: self.integrator,
            n_traj: self.experiment.n_traj,
            master_seed: self.experiment.master_seed,
            tau_grid: self
                .experiment
                .tau_grid
                .clone()
                .unwrap_or_else(|| default_tau_grid(self.anneal.t_f, 15)),
            mode: self.experiment.mode,
            dynamics: self.experiment.dynamics,
            frozen_s: self.experiment.frozen_s,
            eta: self.classical.eta,
        }
    }
}

fn range(key: &str, value: f64, reason: &str) -> ConfigError {
    ConfigError::Range {
        key: key.to_string(),
        message: format!("{reason} (got {value})"),
    }
}

fn scoped(section: &str, r: lgqa::Result<()>) -> Result<(), ConfigError> {
    r.map_err(|e| match e {
        lgqa::Error::InvalidParameter { name, value, reason } => range(&format!("{section}.{name}"), value, reason),
        other => ConfigError::Range {
            key: section.to_string(),
            message: other.to_string(),
        },
    })
}
