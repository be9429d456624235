//! Scenario configuration: JSON document, fully defaulted and validated.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{BatteryParams, BatteryPreferences, ComfortTargets, EnergyBins, ThermoParams};
use crate::environment::NoiseConfig;
use crate::inference::SelectionMode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Time-series file, relative to the config file's directory.
    pub input: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Planning horizon in 2-hour steps.
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    /// Simulated days; the input days repeat cyclically. Defaults to the
    /// number of days in the input.
    #[serde(default)]
    pub days: Option<usize>,
    /// Learn the room-temperature transition from all-ones Dirichlet counts.
    #[serde(default)]
    pub learn: bool,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
    /// Policy precision (gamma).
    #[serde(default = "default_precision")]
    pub policy_precision: f64,
    /// Weight of the parameter information gain in policy scores.
    #[serde(default = "default_novelty_weight")]
    pub novelty_weight: f64,
    #[serde(default)]
    pub action_selection: SelectionMode,
    #[serde(default = "default_policy_cap")]
    pub policy_cap: usize,
    #[serde(default)]
    pub thermo: ThermoParams,
    #[serde(default)]
    pub battery: BatteryParams,
    #[serde(default)]
    pub comfort: ComfortTargets,
    #[serde(default)]
    pub bins: EnergyBins,
    #[serde(default)]
    pub battery_prefs: BatteryPreferences,
    #[serde(default)]
    pub noise: NoiseConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_horizon() -> usize {
    6
}

fn default_learning_rate() -> f64 {
    1000.0
}

fn default_precision() -> f64 {
    1.0
}

fn default_novelty_weight() -> f64 {
    3.0
}

fn default_policy_cap() -> usize {
    1_000_000
}

impl ScenarioConfig {
    /// Defaults for everything but the input path.
    pub fn with_input(input: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            output_dir: default_output_dir(),
            horizon: default_horizon(),
            days: None,
            learn: false,
            learning_rate: default_learning_rate(),
            seed: 0,
            policy_precision: default_precision(),
            novelty_weight: default_novelty_weight(),
            action_selection: SelectionMode::default(),
            policy_cap: default_policy_cap(),
            thermo: ThermoParams::default(),
            battery: BatteryParams::default(),
            comfort: ComfortTargets::default(),
            bins: EnergyBins::default(),
            battery_prefs: BatteryPreferences::default(),
            noise: NoiseConfig::default(),
        }
    }

    /// Semantic checks that do not touch the file system.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        let policies = 3u128.checked_pow(self.horizon as u32);
        if policies.is_none_or(|n| n > self.policy_cap as u128) {
            return Err(invalid(
                "horizon",
                format!(
                    "3^{} policies exceeds policy_cap {}",
                    self.horizon, self.policy_cap
                ),
            ));
        }
        if self.days == Some(0) {
            return Err(invalid("days", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning_rate", "must be positive"));
        }
        if !(self.policy_precision > 0.0 && self.policy_precision.is_finite()) {
            return Err(invalid("policy_precision", "must be positive"));
        }
        if !(self.novelty_weight >= 0.0 && self.novelty_weight.is_finite()) {
            return Err(invalid("novelty_weight", "must be non-negative"));
        }
        let domain = |section: &str, r: Result<(), crate::domain::DomainError>| {
            r.map_err(|e| {
                let msg = e.to_string();
                let msg = msg.trim_start_matches("invalid parameter: ").to_string();
                let key = msg.split_whitespace().next().unwrap_or(section);
                let key = if key.starts_with(section) {
                    key
                } else {
                    section
                };
                invalid(key, msg.clone())
            })
        };
        domain("thermo", self.thermo.validate())?;
        domain("battery", self.battery.validate())?;
        domain("comfort", self.comfort.validate())?;
        domain("battery_prefs", self.battery_prefs.validate())?;
        for (key, v) in [
            ("bins.energy_step", self.bins.energy_step),
            ("bins.cost_step", self.bins.cost_step),
            ("bins.ghg_step", self.bins.ghg_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(key, format!("must be positive, got {v}")));
            }
        }
        self.noise.validate().map_err(|m| {
            let key = m.split_whitespace().next().unwrap_or("noise").to_string();
            invalid(&key, m)
        })?;
        Ok(())
    }
}

/// Parses config text; relative paths are resolved against `base_dir`.
pub fn parse_and_validate(text: &str, base_dir: &Path) -> Result<ScenarioConfig, ConfigError> {
    let mut config: ScenarioConfig =
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    config.validate()?;
    if config.input.is_relative() {
        config.input = base_dir.join(&config.input);
    }
    if config.output_dir.is_relative() {
        config.output_dir = base_dir.join(&config.output_dir);
    }
    Ok(config)
}

/// Reads, parses and validates a config file, checking that its input exists.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let config = parse_and_validate(&text, base)?;
    if !config.input.is_file() {
        return Err(invalid(
            "input",
            format!("{} does not exist", config.input.display()),
        ));
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
        parse_and_validate(text, Path::new("/base"))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse(r#"{"input": "data.csv"}"#).unwrap();
        assert_eq!(c.horizon, 6);
        assert_eq!(c.input, PathBuf::from("/base/data.csv"));
        assert_eq!(c.output_dir, PathBuf::from("/base/results"));
        assert_eq!(c.thermo, ThermoParams::default());
        assert_eq!(c.action_selection, SelectionMode::Deterministic);
        assert!(!c.learn);
    }

    #[test]
    fn horizon_zero_rejected() {
        match parse(r#"{"input": "d.csv", "horizon": 0}"#) {
            Err(ConfigError::Invalid { key, .. }) => assert_eq!(key, "horizon"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_named() {
        let err = parse(r#"{"input": "d.csv", "horizen": 4}"#).unwrap_err();
        assert!(err.to_string().contains("horizen"), "{err}");
        let err = parse(r#"{"input": "d.csv", "thermo": {"alfa": 0.3}}"#).unwrap_err();
        assert!(err.to_string().contains("alfa"), "{err}");
    }

    #[test]
    fn nested_violation_names_key() {
        match parse(r#"{"input": "d.csv", "thermo": {"alpha": 1.5}}"#) {
            Err(ConfigError::Invalid { key, .. }) => assert_eq!(key, "thermo.alpha"),
            other => panic!("unexpected {other:?}"),
        }
        match parse(r#"{"input": "d.csv", "noise": {"soc": 0.9}}"#) {
            Err(ConfigError::Invalid { key, .. }) => assert_eq!(key, "noise.soc"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn policy_cap_enforced() {
        assert!(parse(r#"{"input": "d.csv", "horizon": 7, "policy_cap": 729}"#).is_err());
        assert!(parse(r#"{"input": "d.csv", "horizon": 6, "policy_cap": 729}"#).is_ok());
        assert!(parse(r#"{"input": "d.csv", "horizon": 200}"#).is_err());
    }

    #[test]
    fn missing_input_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"input": "nope.csv"}"#).unwrap();
        match load_config(&path) {
            Err(ConfigError::Invalid { key, .. }) => assert_eq!(key, "input"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
