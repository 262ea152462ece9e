//! Drug-type extraction: partition the 2-D embedding into clusters and score
//! the partition.

mod agglomerative;
mod birch;
mod kmeans;
mod metrics;

pub use agglomerative::{agglomerative, linkage_tree, Dendrogram, Linkage, Merge};
pub use birch::{birch, BirchConfig};
pub use kmeans::{kmeans, kmeans_with, KMeansConfig, KMeansResult};
pub use metrics::{
    atc_level1, davies_bouldin, kl_alignment, quality_report, silhouette, trimmed_purity, QualityReport,
    DEFAULT_KL_EPSILON, DEFAULT_MIN_CLUSTER_SIZE,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::Embedding2D;

pub const MIN_CLUSTERS: usize = 5;
pub const MAX_CLUSTERS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusteringError {
    #[error("{rows} points cannot form {k} clusters")]
    TooFewPoints { rows: usize, k: usize },
    #[error("cluster count {0} outside {MIN_CLUSTERS}..={MAX_CLUSTERS}")]
    ClusterCountOutOfRange(usize),
    #[error("only {entries} distinct CF entries, cannot form {k} clusters")]
    NClustersUnreachable { entries: usize, k: usize },
    #[error("metric needs at least two clusters")]
    SingleCluster,
    #[error("no cluster has enough ATC-coded drugs")]
    NoEligibleClusters,
    #[error("no drug carries an ATC code")]
    NoAtcCodes,
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMethod {
    KMeans,
    Birch,
    Agglomerative,
}

impl ClusterMethod {
    pub const ALL: [ClusterMethod; 3] = [ClusterMethod::KMeans, ClusterMethod::Birch, ClusterMethod::Agglomerative];

    pub fn name(self) -> &'static str {
        match self {
            ClusterMethod::KMeans => "kmeans",
            ClusterMethod::Birch => "birch",
            ClusterMethod::Agglomerative => "agglomerative",
        }
    }
}

impl fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClusterMethod {
    type Err = ClusteringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClusterMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ClusteringError::InvalidParameter(format!("unknown clustering method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClusteringSpec {
    pub method: ClusterMethod,
    pub n_clusters: usize,
    pub seed: u64,
}

impl ClusteringSpec {
    /// Checked constructor; `n_clusters` must lie in 5..=20.
    pub fn new(method: ClusterMethod, n_clusters: usize, seed: u64) -> Result<Self, ClusteringError> {
        if !(MIN_CLUSTERS..=MAX_CLUSTERS).contains(&n_clusters) {
            return Err(ClusteringError::ClusterCountOutOfRange(n_clusters));
        }
        Ok(ClusteringSpec {
            method,
            n_clusters,
            seed,
        })
    }
}

/// Cluster label per drug. Labels are numbered by first appearance and every
/// label in `0..n_clusters` is used.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    n_clusters: usize,
}

impl ClusterAssignment {
    /// Renumbers arbitrary labels by first appearance.
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels: Vec<usize> = raw
            .iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        ClusterAssignment {
            labels,
            n_clusters: map.len(),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.n_clusters];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }
}

fn check_k(rows: usize, k: usize) -> Result<(), ClusteringError> {
    if k == 0 || rows < k {
        return Err(ClusteringError::TooFewPoints { rows, k });
    }
    Ok(())
}

/// Runs the method named by `spec`. The cluster-count range is enforced by
/// [`ClusteringSpec::new`], not here, so degenerate counts stay testable.
pub fn cluster(e: &Embedding2D, spec: &ClusteringSpec) -> Result<ClusterAssignment, ClusteringError> {
    let pts = e.points();
    match spec.method {
        ClusterMethod::KMeans => kmeans(pts, spec.n_clusters, spec.seed).map(|r| r.assignment),
        ClusterMethod::Birch => birch(pts, spec.n_clusters, &BirchConfig::default()),
        ClusterMethod::Agglomerative => agglomerative(pts, spec.n_clusters, Linkage::Ward),
    }
}

pub(crate) fn sq_dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

pub(crate) fn dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    sq_dist(a, b).sqrt()
}
