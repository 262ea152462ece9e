use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_k, sq_dist, ClusterAssignment, ClusteringError};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub n_init: usize,
    pub max_iter: usize,
    /// Stop once the relative inertia change falls below this.
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            n_init: 10,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub assignment: ClusterAssignment,
    pub centroids: Vec<[f64; 2]>,
    /// Within-cluster sum of squares of the final partition.
    pub inertia: f64,
    /// Partition SSE after each Lloyd step of the winning restart.
    pub inertia_history: Vec<f64>,
}

pub fn kmeans(points: &[[f64; 2]], k: usize, seed: u64) -> Result<KMeansResult, ClusteringError> {
    kmeans_with(points, k, seed, &KMeansConfig::default())
}

pub fn kmeans_with(
    points: &[[f64; 2]],
    k: usize,
    seed: u64,
    config: &KMeansConfig,
) -> Result<KMeansResult, ClusteringError> {
    check_k(points.len(), k)?;
    if config.n_init == 0 || config.max_iter == 0 {
        return Err(ClusteringError::InvalidParameter("n_init and max_iter must be positive".into()));
    }
    let runs = par::map_range(config.n_init, |run| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(run as u64);
        lloyd(points, k, &mut rng, config)
    });
    // first run wins ties
    let best = runs
        .into_iter()
        .reduce(|best, r| if r.inertia < best.inertia { r } else { best })
        .expect("n_init > 0");
    Ok(best)
}

fn nearest(p: &[f64; 2], centroids: &[[f64; 2]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.iter().enumerate() {
        let d = sq_dist(p, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// One D²-weighted draw; zero-weight points are never chosen.
fn d2_draw(d2: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let n = d2.len();
    let mut r = rng.random::<f64>() * total;
    let mut chosen = n - 1;
    for (i, &w) in d2.iter().enumerate() {
        if w > 0.0 && r < w {
            chosen = i;
            break;
        }
        r -= w;
    }
    // guard against rounding landing on a zero-weight tail
    while d2[chosen] == 0.0 {
        chosen -= 1;
    }
    chosen
}

/// Greedy k-means++: each new centre is the best of `2 + ⌊ln k⌋`
/// D²-weighted candidates by resulting potential; the first wins ties.
fn plus_plus(points: &[[f64; 2]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let n = points.len();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centroids = vec![points[rng.random_range(0..n)]];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let candidates: Vec<usize> = if total > 0.0 {
            (0..trials).map(|_| d2_draw(&d2, total, rng)).collect()
        } else {
            vec![rng.random_range(0..n)]
        };
        let mut best: Option<(f64, Vec<f64>, usize)> = None;
        for idx in candidates {
            let c = points[idx];
            let next: Vec<f64> = d2.iter().zip(points).map(|(&w, p)| w.min(sq_dist(p, &c))).collect();
            let potential: f64 = next.iter().sum();
            if best.as_ref().is_none_or(|b| potential < b.0) {
                best = Some((potential, next, idx));
            }
        }
        let (_, next, idx) = best.expect("at least one candidate");
        d2 = next;
        centroids.push(points[idx]);
    }
    centroids
}

fn partition_sse(points: &[[f64; 2]], labels: &[usize], k: usize) -> (Vec<[f64; 2]>, f64) {
    let mut sum = vec![[0.0f64; 2]; k];
    let mut count = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        sum[l][0] += p[0];
        sum[l][1] += p[1];
        count[l] += 1;
    }
    let centroids: Vec<[f64; 2]> = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| {
            let c = c.max(1) as f64;
            [s[0] / c, s[1] / c]
        })
        .collect();
    let sse = points.iter().zip(labels).map(|(p, &l)| sq_dist(p, &centroids[l])).sum();
    (centroids, sse)
}

fn lloyd(points: &[[f64; 2]], k: usize, rng: &mut ChaCha8Rng, config: &KMeansConfig) -> KMeansResult {
    let mut centroids = plus_plus(points, k, rng);
    let mut labels = vec![0usize; points.len()];
    let mut history = Vec::new();
    let mut prev = f64::INFINITY;
    for _ in 0..config.max_iter {
        let mut cost = vec![0.0; points.len()];
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            labels[i] = c;
            cost[i] = d;
        }
        repair_empty(points, &mut labels, &mut cost, k);
        let (next, sse) = partition_sse(points, &labels, k);
        history.push(sse);
        centroids = next;
        let converged = prev.is_finite() && (prev - sse).abs() <= config.tol * prev.max(f64::MIN_POSITIVE);
        prev = sse;
        if converged {
            break;
        }
    }
    let (centroids_final, inertia) = partition_sse(points, &labels, k);
    KMeansResult {
        assignment: ClusterAssignment::from_labels(&labels),
        centroids: reorder(&centroids_final, &labels),
        inertia,
        inertia_history: history,
    }
}

/// Gives each empty cluster the point currently farthest from its centroid,
/// taken only from clusters that keep at least one member.
fn repair_empty(points: &[[f64; 2]], labels: &mut [usize], cost: &mut [f64], k: usize) {
    let mut count = vec![0usize; k];
    for &l in labels.iter() {
        count[l] += 1;
    }
    for c in 0..k {
        if count[c] > 0 {
            continue;
        }
        let mut best: Option<usize> = None;
        for i in 0..points.len() {
            if count[labels[i]] < 2 {
                continue;
            }
            if best.is_none_or(|b| cost[i] > cost[b]) {
                best = Some(i);
            }
        }
        let i = best.expect("n >= k guarantees a donor cluster");
        count[labels[i]] -= 1;
        labels[i] = c;
        count[c] = 1;
        cost[i] = 0.0;
    }
}

/// Centroids listed in the canonical label order of `from_labels`.
fn reorder(centroids: &[[f64; 2]], raw: &[usize]) -> Vec<[f64; 2]> {
    let mut seen = vec![false; centroids.len()];
    let mut out = Vec::with_capacity(centroids.len());
    for &l in raw {
        if !seen[l] {
            seen[l] = true;
            out.push(centroids[l]);
        }
    }
    out
}
