//! Flat `key = value` run configuration.
//!
//! Lines starting with `#` and blank lines are ignored. Every key must be
//! known; values are validated before any run starts.

use std::path::PathBuf;

use qsc_core::{AgentKind, EnvConfig, Hyperparams, SelectionMode};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown config key '{key}'")]
    UnknownKey { key: String },
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("invalid value '{value}' for '{key}': {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error(transparent)]
    Core(#[from] qsc_core::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub hyperparams: Hyperparams,
    pub agent: AgentKind,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub selection: SelectionMode,
    pub parallel: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            hyperparams: Hyperparams::default(),
            agent: AgentKind::Hcqa,
            episodes: 4000,
            seeds: vec![0],
            out: PathBuf::from("runs"),
            selection: SelectionMode::Sample,
            parallel: 1,
        }
    }
}

pub const KEYS: &[&str] = &[
    "n_qubits",
    "gate_angle",
    "threshold",
    "max_steps",
    "grid_theta",
    "grid_phi",
    "learning_rate",
    "gamma",
    "epsilon_start",
    "epsilon_end",
    "epsilon_anneal_episodes",
    "batch_size",
    "buffer_capacity",
    "update_every_steps",
    "target_sync_every_steps",
    "agent",
    "episodes",
    "seeds",
    "out",
    "selection",
    "parallel",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: line.to_string(),
                });
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let hp = &mut self.hyperparams;
        match key {
            "n_qubits" => self.env.n_qubits = parse(key, value)?,
            "gate_angle" => self.env.gate_angle = parse(key, value)?,
            "threshold" => self.env.threshold = parse(key, value)?,
            "max_steps" => self.env.max_steps = parse(key, value)?,
            "grid_theta" => self.env.grid_theta = parse(key, value)?,
            "grid_phi" => self.env.grid_phi = parse(key, value)?,
            "learning_rate" => hp.learning_rate = parse(key, value)?,
            "gamma" => hp.gamma = parse(key, value)?,
            "epsilon_start" => hp.epsilon_start = parse(key, value)?,
            "epsilon_end" => hp.epsilon_end = parse(key, value)?,
            "epsilon_anneal_episodes" => hp.epsilon_anneal_episodes = parse(key, value)?,
            "batch_size" => hp.batch_size = parse(key, value)?,
            "buffer_capacity" => hp.buffer_capacity = parse(key, value)?,
            "update_every_steps" => hp.update_every_steps = parse(key, value)?,
            "target_sync_every_steps" => hp.target_sync_every_steps = parse(key, value)?,
            "agent" => self.agent = parse(key, value)?,
            "episodes" => self.episodes = parse(key, value)?,
            "seeds" => {
                self.seeds = value
                    .split(',')
                    .map(|s| parse(key, s.trim()))
                    .collect::<Result<_, _>>()?
            }
            "out" => self.out = PathBuf::from(value),
            "selection" => self.selection = parse(key, value)?,
            "parallel" => self.parallel = parse(key, value)?,
            _ => return Err(ConfigError::UnknownKey { key: key.to_string() }),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.env.validate()?;
        self.hyperparams.validate()?;
        let invalid = |key: &str, value: String, reason: &str| ConfigError::InvalidValue {
            key: key.into(),
            value,
            reason: reason.into(),
        };
        if self.episodes == 0 {
            return Err(invalid("episodes", "0".into(), "must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", String::new(), "at least one seed is required"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(invalid("seeds", format!("{:?}", self.seeds), "seeds must be distinct"));
        }
        if self.parallel == 0 {
            return Err(invalid("parallel", "0".into(), "must be at least 1"));
        }
        Ok(())
    }
}
