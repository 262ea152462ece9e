use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    better, reward, Action, RunLogEntry, SearchConfig, SearchError, SearchOutcome, Strategy, StrategyEvaluator,
    StartState, Trackers, ACTION_COUNT, RUN_LOG_SCHEMA_VERSION, SPACE_SIZE,
};
use crate::evaluate::{EvalError, Metrics};

/// Dense action values over the full space, zero-initialised.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: Vec<f64>,
    visits: Vec<u64>,
}

impl Default for QTable {
    fn default() -> Self {
        QTable::new()
    }
}

fn slot(s: &Strategy, a: Action) -> usize {
    s.index() * ACTION_COUNT + a.index()
}

impl QTable {
    pub fn new() -> Self {
        QTable {
            values: vec![0.0; SPACE_SIZE * ACTION_COUNT],
            visits: vec![0; SPACE_SIZE * ACTION_COUNT],
        }
    }

    pub fn get(&self, s: &Strategy, a: Action) -> f64 {
        self.values[slot(s, a)]
    }

    pub fn visits(&self, s: &Strategy, a: Action) -> u64 {
        self.visits[slot(s, a)]
    }

    pub fn max_value(&self, s: &Strategy) -> f64 {
        let base = s.index() * ACTION_COUNT;
        self.values[base..base + ACTION_COUNT]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Actions attaining the maximum value at `s`, in action order.
    pub fn greedy_actions(&self, s: &Strategy) -> Vec<Action> {
        let m = self.max_value(s);
        Action::all().into_iter().filter(|&a| self.get(s, a) == m).collect()
    }

    /// Entries that were ever updated, keyed `state|action`.
    fn to_maps(&self) -> (BTreeMap<String, f64>, BTreeMap<String, u64>) {
        let mut q = BTreeMap::new();
        let mut n = BTreeMap::new();
        for (i, (&v, &c)) in self.values.iter().zip(&self.visits).enumerate() {
            if c == 0 && v == 0.0 {
                continue;
            }
            let s = Strategy::from_index(i / ACTION_COUNT).expect("in range");
            let a = Action::from_index(i % ACTION_COUNT).expect("in range");
            let key = format!("{s}|{a}");
            q.insert(key.clone(), v);
            n.insert(key, c);
        }
        (q, n)
    }

    fn from_maps(q: &BTreeMap<String, f64>, n: &BTreeMap<String, u64>) -> Result<Self, SearchError> {
        let parse = |key: &str| -> Result<usize, SearchError> {
            let (s, a) = key
                .split_once('|')
                .ok_or_else(|| SearchError::Checkpoint(format!("bad key {key:?}")))?;
            Ok(slot(&s.parse()?, a.parse()?))
        };
        let mut t = QTable::new();
        for (k, &v) in q {
            if !v.is_finite() {
                return Err(SearchError::Checkpoint(format!("non-finite value at {k}")));
            }
            t.values[parse(k)?] = v;
        }
        for (k, &c) in n {
            t.visits[parse(k)?] = c;
        }
        Ok(t)
    }
}

/// Q(s,a) ← Q(s,a) + α·(ℛ + γ·maxₐ' Q(s',a') − Q(s,a)); returns the new value.
/// Evaluated as (1 − α)·Q + α·target so that α = 1 assigns exactly.
pub fn q_update(table: &mut QTable, s: &Strategy, a: Action, r: f64, next: &Strategy, alpha: f64, gamma: f64) -> f64 {
    let target = r + gamma * table.max_value(next);
    let i = slot(s, a);
    table.values[i] = (1.0 - alpha) * table.values[i] + alpha * target;
    table.visits[i] += 1;
    table.values[i]
}

/// Search state at an episode boundary. Resuming from it replays the
/// remaining episodes exactly as an uninterrupted run would.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: SearchConfig,
    pub table: QTable,
    pub next_episode: u64,
    pub epsilon: f64,
    pub trackers: Trackers,
    pub evaluated: BTreeMap<Strategy, Metrics>,
    pub log: Vec<RunLogEntry>,
}

#[derive(Serialize, Deserialize)]
struct EvaluatedJson {
    strategy: Strategy,
    metrics: Metrics,
}

#[derive(Serialize, Deserialize)]
struct CheckpointJson {
    config: SearchConfig,
    q: BTreeMap<String, f64>,
    visits: BTreeMap<String, u64>,
    next_episode: u64,
    epsilon: f64,
    trackers: Trackers,
    evaluated: Vec<EvaluatedJson>,
    log: Vec<RunLogEntry>,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String, SearchError> {
        let (q, visits) = self.table.to_maps();
        let j = CheckpointJson {
            config: self.config.clone(),
            q,
            visits,
            next_episode: self.next_episode,
            epsilon: self.epsilon,
            trackers: self.trackers,
            evaluated: self
                .evaluated
                .iter()
                .map(|(s, m)| EvaluatedJson {
                    strategy: *s,
                    metrics: *m,
                })
                .collect(),
            log: self.log.clone(),
        };
        serde_json::to_string_pretty(&j).map_err(|e| SearchError::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, SearchError> {
        let j: CheckpointJson = serde_json::from_str(text).map_err(|e| SearchError::Checkpoint(e.to_string()))?;
        Ok(Checkpoint {
            config: j.config,
            table: QTable::from_maps(&j.q, &j.visits)?,
            next_episode: j.next_episode,
            epsilon: j.epsilon,
            trackers: j.trackers,
            evaluated: j.evaluated.into_iter().map(|e| (e.strategy, e.metrics)).collect(),
            log: j.log,
        })
    }

    fn fresh(config: &SearchConfig) -> Self {
        Checkpoint {
            config: config.clone(),
            table: QTable::new(),
            next_episode: 0,
            epsilon: config.epsilon,
            trackers: Trackers::default(),
            evaluated: BTreeMap::new(),
            log: Vec::new(),
        }
    }
}

fn episode_rng(seed: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    rng
}

fn select_action(table: &QTable, s: &Strategy, epsilon: f64, rng: &mut ChaCha8Rng) -> Action {
    if rng.random::<f64>() < epsilon {
        Action::all()[rng.random_range(0..ACTION_COUNT)]
    } else {
        let best = table.greedy_actions(s);
        best[rng.random_range(0..best.len())]
    }
}

/// Runs Q-learning from scratch. See [`q_search_resume`].
pub fn q_search<E: StrategyEvaluator + ?Sized>(
    config: &SearchConfig,
    evaluator: &E,
) -> Result<SearchOutcome, SearchError> {
    q_search_resume(config, evaluator, None, &mut |_| Ok(()))
}

/// Runs the remaining episodes, starting from `resume` when given.
/// `on_episode` receives a checkpoint after every finished episode.
///
/// Each episode starts at a uniformly random strategy whose evaluation does
/// not count toward patience, then moves by ε-greedy actions until `patience`
/// consecutive steps improve neither tracker. The Q-table and trackers are
/// shared by all episodes.
pub fn q_search_resume<E: StrategyEvaluator + ?Sized>(
    config: &SearchConfig,
    evaluator: &E,
    resume: Option<Checkpoint>,
    on_episode: &mut dyn FnMut(&Checkpoint) -> Result<(), SearchError>,
) -> Result<SearchOutcome, SearchError> {
    config.validate()?;
    let mut st = match resume {
        Some(c) if c.config != *config => {
            return Err(SearchError::Checkpoint("checkpoint was written with a different configuration".into()))
        }
        Some(c) => c,
        None => Checkpoint::fresh(config),
    };
    let mut memo: HashMap<Strategy, Metrics> = st.evaluated.iter().map(|(s, m)| (*s, *m)).collect();
    let mut wall_times = vec![0.0; st.log.len()];
    let initial = Strategy::from_index(episode_rng(config.seed, 0).random_range(0..SPACE_SIZE))?;
    let budget_left = |memo: &HashMap<Strategy, Metrics>| config.max_evaluations.is_none_or(|cap| memo.len() < cap);

    while (st.next_episode as usize) < config.episodes && budget_left(&memo) {
        let episode = st.next_episode;
        let mut rng = episode_rng(config.seed, episode);
        let drawn = Strategy::from_index(rng.random_range(0..SPACE_SIZE))?;
        let mut s = match config.start {
            StartState::PerEpisode => drawn,
            StartState::PerRun => initial,
        };
        let mut action: Option<Action> = None;
        let mut stale = 0usize;
        loop {
            let eps = st.epsilon;
            let next = action.map_or(s, |a| a.apply(s));
            let t0 = Instant::now();
            let (m, cached) = match memo.get(&next) {
                Some(m) => (*m, true),
                None => match evaluator.evaluate(&next) {
                    Ok(m) => {
                        memo.insert(next, m);
                        (m, false)
                    }
                    Err(SearchError::Evaluation(EvalError::RemoteUnavailable(_))) => break,
                    Err(e) => return Err(e),
                },
            };
            let r = reward(m.accuracy, m.f1, st.trackers.accuracy, st.trackers.f1);
            let improved = st.trackers.update(&m, config.tracker_mode);
            if let Some(a) = action {
                q_update(&mut st.table, &s, a, r, &next, config.alpha, config.gamma);
                st.epsilon = (st.epsilon * config.epsilon_decay).max(config.epsilon_floor);
                if improved {
                    stale = 0;
                } else {
                    stale += 1;
                }
            }
            st.log.push(RunLogEntry {
                schema_version: RUN_LOG_SCHEMA_VERSION,
                step: st.log.len() as u64,
                episode,
                action: action.map_or_else(|| "init".to_string(), |a| a.name()),
                strategy: next,
                accuracy: m.accuracy,
                f1: m.f1,
                reward: r,
                best_accuracy: st.trackers.accuracy,
                best_f1: st.trackers.f1,
                validation_loss: m.validation_loss,
                epsilon: eps,
                cached,
            });
            wall_times.push(t0.elapsed().as_secs_f64());
            s = next;
            if stale >= config.patience || !budget_left(&memo) {
                break;
            }
            action = Some(select_action(&st.table, &s, st.epsilon, &mut rng));
        }
        st.next_episode += 1;
        st.evaluated = memo.iter().map(|(s, m)| (*s, *m)).collect();
        on_episode(&st)?;
    }
    finish(st.log, &memo, wall_times)
}

pub(super) fn finish(
    log: Vec<RunLogEntry>,
    memo: &HashMap<Strategy, Metrics>,
    wall_times: Vec<f64>,
) -> Result<SearchOutcome, SearchError> {
    let mut best: Option<(Strategy, Metrics)> = None;
    for e in &log {
        let m = memo[&e.strategy];
        if best.as_ref().is_none_or(|(bs, bm)| better((&e.strategy, &m), (bs, bm))) {
            best = Some((e.strategy, m));
        }
    }
    let (best, best_metrics) = best.ok_or(SearchError::NothingEvaluated)?;
    Ok(SearchOutcome {
        best,
        best_metrics,
        log,
        evaluations: memo.len(),
        wall_times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_when_alpha_one_gamma_zero() {
        let mut t = QTable::new();
        let s = Strategy::from_index(5).unwrap();
        let a = Action::all()[3];
        assert_eq!(q_update(&mut t, &s, a, 0.37, &s, 1.0, 0.0), 0.37);
        assert_eq!(t.get(&s, a), 0.37);
        assert_eq!(t.visits(&s, a), 1);
    }

    #[test]
    fn zero_reward_leaves_zero_table() {
        let mut t = QTable::new();
        let s = Strategy::from_index(0).unwrap();
        q_update(&mut t, &s, Action::Stay, 0.0, &s, 0.1, 0.9);
        assert!(t.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut t = QTable::new();
        let s = Strategy::from_index(10).unwrap();
        let s2 = Strategy::from_index(11).unwrap();
        q_update(&mut t, &s, Action::all()[9], 0.5, &s2, 0.1, 0.9);
        let mut c = Checkpoint::fresh(&SearchConfig::default());
        c.table = t;
        c.next_episode = 2;
        c.evaluated.insert(s, Metrics::default());
        let back = Checkpoint::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
