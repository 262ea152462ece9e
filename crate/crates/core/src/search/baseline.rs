use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::qlearn::finish;
use super::{
    reward, RunLogEntry, SearchError, SearchOutcome, Strategy, StrategyEvaluator, TrackerMode, Trackers,
    RUN_LOG_SCHEMA_VERSION, SPACE_SIZE,
};
use crate::clustering::ClusterMethod;
use crate::evaluate::Metrics;
use crate::par;
use crate::prompt::Modality;

/// Cartesian grid over the strategy dimensions. Batch and learning rate are
/// given as indices into their value grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoarseGrid {
    pub methods: Vec<ClusterMethod>,
    pub n_clusters: Vec<usize>,
    pub modalities: Vec<Modality>,
    pub batch_idx: Vec<usize>,
    pub lr_idx: Vec<usize>,
}

impl Default for CoarseGrid {
    /// Every method, every other cluster count from 5, both modalities and
    /// the outer batch and learning-rate values: 192 strategies.
    fn default() -> Self {
        CoarseGrid {
            methods: ClusterMethod::ALL.to_vec(),
            n_clusters: (5..=20).step_by(2).collect(),
            modalities: Modality::ALL.to_vec(),
            batch_idx: vec![0, 2],
            lr_idx: vec![0, 2],
        }
    }
}

impl CoarseGrid {
    /// Distinct grid strategies in index order.
    pub fn strategies(&self) -> Result<Vec<Strategy>, SearchError> {
        let mut out = BTreeSet::new();
        for &m in &self.methods {
            for &k in &self.n_clusters {
                for &md in &self.modalities {
                    for &b in &self.batch_idx {
                        for &l in &self.lr_idx {
                            out.insert(Strategy::new(m, k, md, b, l)?);
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(SearchError::EmptyGrid);
        }
        Ok(out.into_iter().collect())
    }
}

/// Evaluates `strategies` (in parallel) and logs them in the given order.
fn exhaustive<E: StrategyEvaluator + ?Sized>(
    strategies: &[Strategy],
    evaluator: &E,
    action: &str,
) -> Result<SearchOutcome, SearchError> {
    let results = par::map_slice(strategies, |s| {
        let t0 = Instant::now();
        evaluator.evaluate(s).map(|m| (m, t0.elapsed().as_secs_f64()))
    });
    let mut trackers = Trackers::default();
    let mut log = Vec::with_capacity(strategies.len());
    let mut memo: HashMap<Strategy, Metrics> = HashMap::new();
    let mut wall_times = Vec::with_capacity(strategies.len());
    for (i, (s, r)) in strategies.iter().zip(results).enumerate() {
        let (m, secs) = r?;
        let rw = reward(m.accuracy, m.f1, trackers.accuracy, trackers.f1);
        trackers.update(&m, TrackerMode::Both);
        memo.insert(*s, m);
        wall_times.push(secs);
        log.push(RunLogEntry {
            schema_version: RUN_LOG_SCHEMA_VERSION,
            step: i as u64,
            episode: 0,
            action: action.to_string(),
            strategy: *s,
            accuracy: m.accuracy,
            f1: m.f1,
            reward: rw,
            best_accuracy: trackers.accuracy,
            best_f1: trackers.f1,
            validation_loss: m.validation_loss,
            epsilon: 0.0,
            cached: false,
        });
    }
    finish(log, &memo, wall_times)
}

/// Evaluates every grid strategy; the best is chosen by F1, then accuracy,
/// then strategy order.
pub fn grid_search<E: StrategyEvaluator + ?Sized>(grid: &CoarseGrid, evaluator: &E) -> Result<SearchOutcome, SearchError> {
    exhaustive(&grid.strategies()?, evaluator, "grid")
}

/// `budget` distinct strategies drawn uniformly without replacement.
pub fn random_sample(budget: usize, seed: u64) -> Result<Vec<Strategy>, SearchError> {
    if budget == 0 || budget > SPACE_SIZE {
        return Err(SearchError::InvalidConfig(format!("random budget must lie in 1..={SPACE_SIZE}")));
    }
    let mut idx: Vec<usize> = (0..SPACE_SIZE).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx.truncate(budget);
    idx.into_iter().map(Strategy::from_index).collect()
}

pub fn random_search<E: StrategyEvaluator + ?Sized>(
    budget: usize,
    seed: u64,
    evaluator: &E,
) -> Result<SearchOutcome, SearchError> {
    exhaustive(&random_sample(budget, seed)?, evaluator, "random")
}
