//! Scoring a strategy: prompts go to a pluggable evaluator, predictions are
//! compared with gold events.

mod cache;
mod metrics;
mod remote;
mod surrogate;

pub use cache::{cache_key, EvalCache};
pub use metrics::{compute_metrics, Metrics, INVALID_PREDICTION};
pub use remote::{extract_first_integer, RemoteConfig, RemoteEvaluator, EVALUATOR_URL_ENV};
pub use surrogate::{surrogate_features, SparseVector, SurrogateConfig, SurrogateEvaluator, TrainingTrace};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::PromptInstance;

/// Batch sizes the search may choose.
pub const BATCH_GRID: [usize; 3] = [12, 16, 24];
/// Learning rates the search may choose.
pub const LR_GRID: [f64; 3] = [5e-4, 7.5e-4, 1e-3];
pub const DEFAULT_DROPOUT: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("gold label {label} not below {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },
    #[error("{0} set is empty")]
    EmptySet(&'static str),
    #[error("remote evaluator unavailable: {0}")]
    RemoteUnavailable(String),
    #[error("malformed evaluator response: {0}")]
    MalformedResponse(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cache io: {0}")]
    Cache(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout: f64,
}

impl Hyperparams {
    pub fn new(batch_size: usize, learning_rate: f64) -> Self {
        Hyperparams {
            batch_size,
            learning_rate,
            dropout: DEFAULT_DROPOUT,
        }
    }
}

/// Rendered prompts for one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSets {
    pub train: Vec<PromptInstance>,
    pub valid: Vec<PromptInstance>,
    pub test: Vec<PromptInstance>,
    pub num_classes: usize,
}

impl PromptSets {
    pub fn validate(&self) -> Result<(), EvalError> {
        for (name, set) in [("train", &self.train), ("valid", &self.valid), ("test", &self.test)] {
            if set.is_empty() {
                return Err(EvalError::EmptySet(name));
            }
            if let Some(p) = set.iter().find(|p| p.gold >= self.num_classes) {
                return Err(EvalError::LabelOutOfRange {
                    label: p.gold,
                    num_classes: self.num_classes,
                });
            }
        }
        Ok(())
    }
}

/// Anything that can train on prompt sets and report test metrics.
pub trait Evaluator: Send + Sync {
    fn train_eval(&self, sets: &PromptSets, hyper: &Hyperparams, seed: u64) -> Result<Metrics, EvalError>;

    /// Short identifier folded into cache keys.
    fn fingerprint(&self) -> String;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EvaluatorConfig {
    Surrogate(SurrogateConfig),
    Remote(RemoteConfig),
}

impl Default for EvaluatorConfig {
    fn default() -> Self {
        EvaluatorConfig::Surrogate(SurrogateConfig::default())
    }
}

impl EvaluatorConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        match self {
            EvaluatorConfig::Surrogate(c) => c.validate(),
            EvaluatorConfig::Remote(c) => c.validate(),
        }
    }

    pub fn build(&self) -> Result<Box<dyn Evaluator>, EvalError> {
        self.validate()?;
        Ok(match self {
            EvaluatorConfig::Surrogate(c) => Box::new(SurrogateEvaluator::new(c.clone())),
            EvaluatorConfig::Remote(c) => Box::new(RemoteEvaluator::new(c.clone())),
        })
    }
}
