//! Pipeline defaults and `key = value` override files.

use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use super::synth::SynthConfig;
use crate::context::Hemisphere;
use crate::ltr::LambdaMartConfig;
use crate::review::SvmConfig;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("config line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: bad value {value:?} for {key}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub svm: SvmConfig,
    pub ltr: LambdaMartConfig,
    pub cv_folds: usize,
    pub hemisphere: Hemisphere,
    pub run_tag: String,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: DEFAULT_SEED,
            svm: SvmConfig::default(),
            ltr: LambdaMartConfig::default(),
            cv_folds: 5,
            hemisphere: Hemisphere::North,
            run_tag: "venuerank".into(),
            synth: SynthConfig::default(),
        }
    }
}

fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        line,
        key: key.to_owned(),
        value: value.to_owned(),
    })
}

impl PipelineConfig {
    pub fn with_seed(seed: u64) -> Self {
        let mut c = PipelineConfig::default();
        c.set_seed(seed);
        c
    }

    /// Propagates one seed to every seeded stage.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.svm.seed = seed;
        self.ltr.seed = seed;
        self.synth.seed = seed;
    }

    pub fn load_overrides(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.apply_overrides(&text)
    }

    /// Applies `key = value` lines; blank lines and `#` comments are ignored.
    pub fn apply_overrides(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "svm.lambda_reg" => self.svm.lambda_reg = parse(line, key, value)?,
                "svm.epochs" => self.svm.epochs = parse(line, key, value)?,
                "ltr.n_trees" => self.ltr.n_trees = parse(line, key, value)?,
                "ltr.learning_rate" => self.ltr.learning_rate = parse(line, key, value)?,
                "ltr.max_leaves" => self.ltr.max_leaves = parse(line, key, value)?,
                "ltr.min_instances_per_leaf" => {
                    self.ltr.min_instances_per_leaf = parse(line, key, value)?
                }
                "cv.k" => self.cv_folds = parse(line, key, value)?,
                "context.hemisphere" => self.hemisphere = parse(line, key, value)?,
                "run.tag" => self.run_tag = value.to_owned(),
                "synth.n_users" => self.synth.n_users = parse(line, key, value)?,
                "synth.n_venues" => self.synth.n_venues = parse(line, key, value)?,
                "synth.n_candidates_per_request" => {
                    self.synth.n_candidates_per_request = parse(line, key, value)?
                }
                "synth.history_size" => self.synth.history_size = parse(line, key, value)?,
                "synth.category_vocab_size" => {
                    self.synth.category_vocab_size = parse(line, key, value)?
                }
                "synth.tag_vocab_size" => self.synth.tag_vocab_size = parse(line, key, value)?,
                "synth.review_term_vocab_size" => {
                    self.synth.review_term_vocab_size = parse(line, key, value)?
                }
                "synth.noise_level" => self.synth.noise_level = parse(line, key, value)?,
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_owned(),
                    })
                }
            }
        }
        Ok(())
    }
}

impl FromStr for Hemisphere {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "north" => Ok(Hemisphere::North),
            "south" => Ok(Hemisphere::South),
            _ => Err(()),
        }
    }
}
