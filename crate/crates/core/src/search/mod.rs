//! Strategy search: tabular Q-learning over single-coordinate moves, plus
//! grid and random baselines. Every searcher emits the same run log.

mod baseline;
mod landscape;
mod log;
mod qlearn;
mod space;

pub use baseline::{grid_search, random_sample, random_search, CoarseGrid};
pub use landscape::{ConstantEvaluator, PlantedLandscape};
pub use log::{read_run_log, write_run_log, RunLogEntry, RUN_LOG_SCHEMA_VERSION};
pub use qlearn::{q_search, q_search_resume, q_update, Checkpoint, QTable};
pub use space::{enumerate_space, Action, Dim, Strategy, ACTION_COUNT, SPACE_SIZE};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluate::{EvalError, Metrics};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("invalid strategy {0}")]
    InvalidStrategy(String),
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("the grid is empty")]
    EmptyGrid,
    #[error("evaluation failed: {0}")]
    Evaluation(#[from] EvalError),
    #[error("strategy {strategy} could not be prepared: {msg}")]
    Pipeline { strategy: String, msg: String },
    #[error("no strategy was evaluated")]
    NothingEvaluated,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Maps a strategy to metrics. Implementations must be deterministic.
pub trait StrategyEvaluator: Sync {
    fn evaluate(&self, strategy: &Strategy) -> Result<Metrics, SearchError>;
}

impl<F> StrategyEvaluator for F
where
    F: Fn(&Strategy) -> Result<Metrics, SearchError> + Sync,
{
    fn evaluate(&self, strategy: &Strategy) -> Result<Metrics, SearchError> {
        self(strategy)
    }
}

/// How a step updates the best-accuracy and best-F1 trackers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackerMode {
    /// Every metric that improved is recorded.
    #[default]
    Both,
    /// Only the first matching case (accuracy before F1) is recorded.
    Literal,
}

/// Where each episode begins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartState {
    /// A fresh uniformly random strategy per episode.
    #[default]
    PerEpisode,
    /// One uniformly random strategy per run, shared by every episode.
    PerRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub episodes: usize,
    /// Non-improving steps tolerated before an episode ends.
    pub patience: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub epsilon_decay: f64,
    pub epsilon_floor: f64,
    pub seed: u64,
    pub tracker_mode: TrackerMode,
    pub start: StartState,
    /// Stop once this many distinct strategies have been evaluated.
    pub max_evaluations: Option<usize>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            episodes: 10,
            patience: 10,
            alpha: 0.1,
            gamma: 0.9,
            epsilon: 0.3,
            epsilon_decay: 0.95,
            epsilon_floor: 0.05,
            seed: 42,
            tracker_mode: TrackerMode::Both,
            start: StartState::PerEpisode,
            max_evaluations: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::InvalidConfig(m.to_string()));
        if self.episodes == 0 || self.patience == 0 {
            return bad("episodes and patience must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.epsilon)
            || !(0.0..=1.0).contains(&self.epsilon_floor)
            || !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0)
        {
            return bad("epsilon, floor and decay must be probabilities (decay > 0)");
        }
        if self.max_evaluations == Some(0) {
            return bad("max_evaluations must be positive");
        }
        Ok(())
    }
}

/// ℛ = (𝒜 − 𝒜_best) + (ℱ − ℱ_best)
pub fn reward(accuracy: f64, f1: f64, best_accuracy: f64, best_f1: f64) -> f64 {
    (accuracy - best_accuracy) + (f1 - best_f1)
}

/// Running best values. Both start at 0, the floor of every metric.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Trackers {
    pub accuracy: f64,
    pub f1: f64,
}

impl Trackers {
    /// Records `m` and reports whether any tracker moved.
    pub fn update(&mut self, m: &Metrics, mode: TrackerMode) -> bool {
        let acc = m.accuracy > self.accuracy;
        let f1 = m.f1 > self.f1;
        match mode {
            TrackerMode::Both => {
                if acc {
                    self.accuracy = m.accuracy;
                }
                if f1 {
                    self.f1 = m.f1;
                }
                acc || f1
            }
            TrackerMode::Literal => {
                if acc {
                    self.accuracy = m.accuracy;
                    true
                } else if f1 {
                    self.f1 = m.f1;
                    true
                } else {
                    false
                }
            }
        }
    }
}

/// True when `a` beats `b`: higher F1, then higher accuracy, then the
/// lexicographically smaller strategy.
pub fn better(a: (&Strategy, &Metrics), b: (&Strategy, &Metrics)) -> bool {
    let (sa, ma) = a;
    let (sb, mb) = b;
    ma.f1
        .total_cmp(&mb.f1)
        .then(ma.accuracy.total_cmp(&mb.accuracy))
        .then(sb.cmp(sa))
        .is_gt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: Strategy,
    pub best_metrics: Metrics,
    pub log: Vec<RunLogEntry>,
    /// Distinct strategies evaluated.
    pub evaluations: usize,
    /// Seconds spent per log entry; kept apart so the log is reproducible.
    #[serde(skip)]
    pub wall_times: Vec<f64>,
}
