use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SearchError;
use crate::clustering::{ClusterMethod, MAX_CLUSTERS, MIN_CLUSTERS};
use crate::evaluate::{Hyperparams, BATCH_GRID, LR_GRID};
use crate::prompt::Modality;

pub const SPACE_SIZE: usize = 3 * 16 * 2 * 3 * 3;

/// One point of the searched space. Field order is the lexicographic
/// tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Strategy {
    pub method: ClusterMethod,
    pub n_clusters: usize,
    pub modality: Modality,
    /// Index into [`BATCH_GRID`].
    pub batch_idx: usize,
    /// Index into [`LR_GRID`].
    pub lr_idx: usize,
}

fn method_pos(m: ClusterMethod) -> usize {
    ClusterMethod::ALL.iter().position(|&x| x == m).expect("listed")
}

fn modality_pos(m: Modality) -> usize {
    Modality::ALL.iter().position(|&x| x == m).expect("listed")
}

impl Strategy {
    pub fn new(
        method: ClusterMethod,
        n_clusters: usize,
        modality: Modality,
        batch_idx: usize,
        lr_idx: usize,
    ) -> Result<Self, SearchError> {
        let s = Strategy {
            method,
            n_clusters,
            modality,
            batch_idx,
            lr_idx,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        if !(MIN_CLUSTERS..=MAX_CLUSTERS).contains(&self.n_clusters)
            || self.batch_idx >= BATCH_GRID.len()
            || self.lr_idx >= LR_GRID.len()
        {
            return Err(SearchError::InvalidStrategy(format!("{self:?}")));
        }
        Ok(())
    }

    /// Dense position in `0..SPACE_SIZE`, consistent with [`enumerate_space`].
    pub fn index(&self) -> usize {
        (((method_pos(self.method) * 16 + (self.n_clusters - MIN_CLUSTERS)) * 2 + modality_pos(self.modality)) * 3
            + self.batch_idx)
            * 3
            + self.lr_idx
    }

    pub fn from_index(i: usize) -> Result<Self, SearchError> {
        if i >= SPACE_SIZE {
            return Err(SearchError::InvalidStrategy(format!("index {i}")));
        }
        Ok(Strategy {
            lr_idx: i % 3,
            batch_idx: (i / 3) % 3,
            modality: Modality::ALL[(i / 9) % 2],
            n_clusters: MIN_CLUSTERS + (i / 18) % 16,
            method: ClusterMethod::ALL[i / 288],
        })
    }

    pub fn batch_size(&self) -> usize {
        BATCH_GRID[self.batch_idx]
    }

    pub fn learning_rate(&self) -> f64 {
        LR_GRID[self.lr_idx]
    }

    pub fn hyperparams(&self) -> Hyperparams {
        Hyperparams::new(self.batch_size(), self.learning_rate())
    }
}

impl fmt::Display for Strategy {
    /// Compact key, e.g. `kmeans/k8/representation/b16/lr0.00075`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/k{}/{}/b{}/lr{}",
            self.method,
            self.n_clusters,
            self.modality,
            self.batch_size(),
            self.learning_rate()
        )
    }
}

impl FromStr for Strategy {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SearchError::InvalidStrategy(s.to_string());
        let parts: Vec<&str> = s.split('/').collect();
        let [method, k, modality, b, lr] = parts[..] else {
            return Err(bad());
        };
        let method: ClusterMethod = method.parse().map_err(|_| bad())?;
        let n_clusters: usize = k.strip_prefix('k').and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let modality: Modality = modality.parse().map_err(|_| bad())?;
        let batch: usize = b.strip_prefix('b').and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let lr: f64 = lr.strip_prefix("lr").and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let batch_idx = BATCH_GRID.iter().position(|&x| x == batch).ok_or_else(bad)?;
        let lr_idx = LR_GRID.iter().position(|&x| x == lr).ok_or_else(bad)?;
        Strategy::new(method, n_clusters, modality, batch_idx, lr_idx)
    }
}

/// JSON form with the concrete batch size and learning rate.
#[derive(Serialize, Deserialize)]
struct StrategyJson {
    method: ClusterMethod,
    n_clusters: usize,
    modality: Modality,
    batch_size: usize,
    learning_rate: f64,
}

impl Serialize for Strategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        StrategyJson {
            method: self.method,
            n_clusters: self.n_clusters,
            modality: self.modality,
            batch_size: self.batch_size(),
            learning_rate: self.learning_rate(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Strategy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let j = StrategyJson::deserialize(d)?;
        let batch_idx = BATCH_GRID
            .iter()
            .position(|&x| x == j.batch_size)
            .ok_or_else(|| D::Error::custom(format!("batch size {} not in {BATCH_GRID:?}", j.batch_size)))?;
        let lr_idx = LR_GRID
            .iter()
            .position(|&x| x == j.learning_rate)
            .ok_or_else(|| D::Error::custom(format!("learning rate {} not in {LR_GRID:?}", j.learning_rate)))?;
        Strategy::new(j.method, j.n_clusters, j.modality, batch_idx, lr_idx).map_err(D::Error::custom)
    }
}

/// All 864 strategies in index order.
pub fn enumerate_space() -> Vec<Strategy> {
    (0..SPACE_SIZE)
        .map(|i| Strategy::from_index(i).expect("index in range"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dim {
    Method,
    NClusters,
    Modality,
    Batch,
    Lr,
}

impl Dim {
    pub const ALL: [Dim; 5] = [Dim::Method, Dim::NClusters, Dim::Modality, Dim::Batch, Dim::Lr];

    fn name(self) -> &'static str {
        match self {
            Dim::Method => "method",
            Dim::NClusters => "n_clusters",
            Dim::Modality => "modality",
            Dim::Batch => "batch",
            Dim::Lr => "lr",
        }
    }
}

/// A single-coordinate move. Method and modality wrap around; cluster count,
/// batch size and learning rate saturate at their ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Stay,
    Next(Dim),
    Prev(Dim),
}

pub const ACTION_COUNT: usize = 11;

impl Action {
    pub fn all() -> [Action; ACTION_COUNT] {
        let mut out = [Action::Stay; ACTION_COUNT];
        for (i, d) in Dim::ALL.into_iter().enumerate() {
            out[1 + 2 * i] = Action::Next(d);
            out[2 + 2 * i] = Action::Prev(d);
        }
        out
    }

    pub fn index(self) -> usize {
        let dim = |d: Dim| Dim::ALL.iter().position(|&x| x == d).expect("listed");
        match self {
            Action::Stay => 0,
            Action::Next(d) => 1 + 2 * dim(d),
            Action::Prev(d) => 2 + 2 * dim(d),
        }
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::all().get(i).copied()
    }

    pub fn name(self) -> String {
        match self {
            Action::Stay => "stay".into(),
            Action::Next(d) => format!("next_{}", d.name()),
            Action::Prev(d) => format!("prev_{}", d.name()),
        }
    }

    pub fn apply(self, s: Strategy) -> Strategy {
        let mut out = s;
        let (dim, up) = match self {
            Action::Stay => return s,
            Action::Next(d) => (d, true),
            Action::Prev(d) => (d, false),
        };
        let cyc = |i: usize, n: usize| if up { (i + 1) % n } else { (i + n - 1) % n };
        let clamp = |i: usize, lo: usize, hi: usize| if up { (i + 1).min(hi) } else { i.saturating_sub(1).max(lo) };
        match dim {
            Dim::Method => out.method = ClusterMethod::ALL[cyc(method_pos(s.method), 3)],
            Dim::Modality => out.modality = Modality::ALL[cyc(modality_pos(s.modality), 2)],
            Dim::NClusters => out.n_clusters = clamp(s.n_clusters, MIN_CLUSTERS, MAX_CLUSTERS),
            Dim::Batch => out.batch_idx = clamp(s.batch_idx, 0, BATCH_GRID.len() - 1),
            Dim::Lr => out.lr_idx = clamp(s.lr_idx, 0, LR_GRID.len() - 1),
        }
        out
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Action {
    type Err = SearchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Action::all()
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| SearchError::InvalidConfig(format!("unknown action {s:?}")))
    }
}
