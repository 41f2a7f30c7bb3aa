//! TOML run configuration.
//!
//! Three tables: `[sim]` (every [`SimConfig`] field), `[agent]` (agent name and
//! hyperparameters) and `[harness]` (run seed, population sizes, sweep grids).
//! Absent keys take their defaults and are reported through `log`; unknown keys
//! are rejected. See `configs/example.toml` at the repository root for an
//! annotated file.

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::agents::AgentSettings;
use crate::config::{InvalidConfig, SimConfig};
use crate::eval::Z_95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessSettings {
    /// Run seed; training and evaluation populations derive from it.
    #[serde(with = "super::seed_serde")]
    pub seed: u64,
    /// Users simulated by `simulate`.
    pub train_users: u64,
    pub eval_users: u64,
    pub reps: u32,
    pub z: f64,
    pub threads: usize,
    pub oracle: bool,
    pub bandit_events_grid: Vec<usize>,
    pub sigma_phi_grid: Vec<f64>,
    /// Training bandit events per point of the `sigma_phi` sweep.
    pub training_bandit_events: usize,
}

impl Default for HarnessSettings {
    fn default() -> Self {
        Self {
            seed: 0,
            train_users: 1000,
            eval_users: 2000,
            reps: 5,
            z: Z_95,
            threads: 1,
            oracle: false,
            bandit_events_grid: vec![100, 1_000, 10_000, 100_000],
            sigma_phi_grid: vec![0.0, 1.0, 2.0, 3.0],
            training_bandit_events: 10_000,
        }
    }
}

impl HarnessSettings {
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        if self.reps == 0 {
            return Err(InvalidConfig("harness.reps must be at least 1".into()));
        }
        if !(self.z.is_finite() && self.z > 0.0) {
            return Err(InvalidConfig("harness.z must be positive".into()));
        }
        if self.threads == 0 {
            return Err(InvalidConfig("harness.threads must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub agent: AgentSettings,
    pub harness: HarnessSettings,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        self.sim.validate()?;
        self.harness.validate()
    }
}

/// Parses and validates a run config, filling absent keys from defaults.
pub fn read_config(text: &str) -> Result<RunConfig, DataError> {
    read_config_over(text, &RunConfig::default())
}

/// Like [`read_config`], but absent keys are taken from `base`.
pub fn read_config_over(text: &str, base: &RunConfig) -> Result<RunConfig, DataError> {
    let given: toml::Table = text.parse().map_err(|e: toml::de::Error| parse_error(text, &e))?;
    let mut merged = toml::Table::try_from(base).expect("run config serializes");
    for (section, value) in &given {
        let Some(known) = merged.get_mut(section) else {
            return Err(DataError::UnknownKey(section.clone()));
        };
        let (Some(value), Some(known)) = (value.as_table(), known.as_table_mut()) else {
            return Err(DataError::parse(1, format!("`{section}` must be a table")));
        };
        if let Some(key) = value.keys().find(|k| !known.contains_key(*k)) {
            return Err(DataError::UnknownKey(format!("{section}.{key}")));
        }
        let missing: Vec<String> = known.keys().filter(|k| !value.contains_key(*k)).cloned().collect();
        for key in missing {
            log::info!("config: {section}.{key} not set, using {}", known[&key]);
        }
        for (key, v) in value {
            known.insert(key.clone(), v.clone());
        }
    }
    for section in merged.keys().filter(|s| !given.contains_key(*s)) {
        log::info!("config: [{section}] not set, using defaults");
    }
    // Type errors are reported against the original text for a line number.
    let _: RunConfig = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
    let config: RunConfig = merged.try_into().map_err(|e: toml::de::Error| DataError::parse(1, e.message().to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn write_config(config: &RunConfig) -> String {
    toml::to_string(config).expect("run config serializes")
}

fn parse_error(text: &str, e: &toml::de::Error) -> DataError {
    let line = e.span().map_or(1, |s| text[..s.start].matches('\n').count() as u64 + 1);
    DataError::parse(line, e.message().to_string())
}
