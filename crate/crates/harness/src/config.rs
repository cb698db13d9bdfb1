//! Experiment configuration: a flat `key = value` file, overridden by CLI
//! flags, overridden in turn by the `PATHSPACE_SEED` environment variable.
//! Scale fields are optional; a check that gets `None` runs at its own
//! canonical size.

use std::fmt;
use std::path::PathBuf;

use sde_engine::rng::{MAX_PATH_INDEX, MAX_STEPS};

pub const MAX_RESAMPLES: u32 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Sphere,
    Group,
}

impl ModelKind {
    pub fn parse(s: &str) -> Option<ModelKind> {
        match s {
            "sphere" => Some(ModelKind::Sphere),
            "group" => Some(ModelKind::Group),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Sphere => "sphere",
            ModelKind::Group => "group",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Both,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<OutputFormat> {
        match s {
            "json" => Some(OutputFormat::Json),
            "csv" => Some(OutputFormat::Csv),
            "both" => Some(OutputFormat::Both),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: Option<ModelKind>,
    pub steps: Option<usize>,
    pub paths: Option<u64>,
    pub resamples: Option<u32>,
    pub seed: u64,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub tol_scale: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: None,
            steps: None,
            paths: None,
            resamples: None,
            seed: 4242,
            out: PathBuf::from("reports"),
            format: OutputFormat::Both,
            tol_scale: 1.0,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    /// Parses a flat `key = value` file. Blank lines and `#` comments are
    /// skipped; unknown keys are errors so typos cannot silently lose a
    /// setting.
    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| ConfigError(format!("line {}: {}", lineno + 1, e.0)))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |what: &str| ConfigError(format!("invalid {what}: {value:?}"));
        match key {
            "model" => self.model = Some(ModelKind::parse(value).ok_or_else(|| bad("model"))?),
            "steps" => self.steps = Some(value.parse().map_err(|_| bad("steps"))?),
            "paths" => self.paths = Some(value.parse().map_err(|_| bad("paths"))?),
            "resamples" => self.resamples = Some(value.parse().map_err(|_| bad("resamples"))?),
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "out" => self.out = PathBuf::from(value),
            "format" => {
                self.format = OutputFormat::parse(value).ok_or_else(|| bad("format"))?
            }
            "tol_scale" => self.tol_scale = value.parse().map_err(|_| bad("tol_scale"))?,
            _ => return Err(ConfigError(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// `PATHSPACE_SEED` outranks both the file and the flags.
    pub fn apply_env(&mut self) -> Result<(), ConfigError> {
        if let Ok(v) = std::env::var("PATHSPACE_SEED") {
            self.seed = v
                .parse()
                .map_err(|_| ConfigError(format!("PATHSPACE_SEED is not an integer: {v:?}")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(s) = self.steps {
            if s < 2 || s >= MAX_STEPS {
                return Err(ConfigError(format!("steps must be in [2, {MAX_STEPS}), got {s}")));
            }
        }
        if let Some(p) = self.paths {
            if p == 0 || p >= MAX_PATH_INDEX {
                return Err(ConfigError(format!(
                    "paths must be in [1, {MAX_PATH_INDEX}), got {p}"
                )));
            }
        }
        if let Some(r) = self.resamples {
            if r == 0 || r >= MAX_RESAMPLES {
                return Err(ConfigError(format!(
                    "resamples must be in [1, {MAX_RESAMPLES}), got {r}"
                )));
            }
        }
        if !(self.tol_scale > 0.0) {
            return Err(ConfigError(format!("tol_scale must be positive, got {}", self.tol_scale)));
        }
        Ok(())
    }

    pub fn steps_or(&self, default: usize) -> usize {
        self.steps.unwrap_or(default)
    }

    pub fn paths_or(&self, default: u64) -> u64 {
        self.paths.unwrap_or(default)
    }

    pub fn resamples_or(&self, default: u32) -> u32 {
        self.resamples.unwrap_or(default)
    }
}
