use std::path::PathBuf;

use crate::model::TrainConfig;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "FERKIT_THREADS";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("`{key}`: cannot parse `{value}`")]
    Value { key: String, value: String },
    #[error("`{key}`: {message}")]
    Range { key: String, message: String },
}

/// Training settings from a `key = value` file, overridable by flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub epochs: u32,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    pub shuffle: bool,
    /// `None` uses every available core.
    pub threads: Option<usize>,
    /// History CSV path; defaults to a sibling of the weight file.
    pub history: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch_size: 100,
            learning_rate: 0.01,
            momentum: 0.9,
            seed: 0,
            shuffle: true,
            threads: None,
            history: None,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Value {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::Value {
            key: key.to_string(),
            value: value.to_string(),
        }),
    }
}

impl RunConfig {
    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: k + 1 })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax { line: k + 1 });
            }
            self.set(key, value).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line: k + 1, key },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "epochs" => self.epochs = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "lr" | "learning_rate" => self.learning_rate = parse_value(key, value)?,
            "momentum" => self.momentum = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "shuffle" => self.shuffle = parse_bool(key, value)?,
            "threads" => self.threads = Some(parse_value(key, value)?),
            "history" => self.history = Some(PathBuf::from(value)),
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: 0,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Worker count after applying the environment cap.
    pub fn resolve_threads(&self, env_cap: Option<&str>) -> Result<usize, ConfigError> {
        let wanted = self
            .threads
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        let cap = match env_cap {
            Some(v) => parse_value::<usize>(THREADS_ENV, v.trim())?,
            None => usize::MAX,
        };
        if cap == 0 {
            return Err(ConfigError::Range {
                key: THREADS_ENV.into(),
                message: "must be at least 1".into(),
            });
        }
        Ok(wanted.clamp(1, cap))
    }

    pub fn train_config(&self, threads: usize) -> Result<TrainConfig, ConfigError> {
        let cfg = TrainConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            seed: self.seed,
            shuffle: self.shuffle,
            threads,
        };
        cfg.validate().map_err(|e| ConfigError::Range {
            key: "config".into(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }
}
