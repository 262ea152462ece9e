use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{dist, ClusteringError};
use crate::par;

/// Clusters with fewer ATC-coded drugs than this are trimmed.
pub const DEFAULT_MIN_CLUSTER_SIZE: usize = 5;
pub const DEFAULT_KL_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub silhouette: f64,
    pub davies_bouldin: f64,
    pub trimmed_purity: Option<f64>,
    pub kl_divergence: Option<f64>,
}

fn check_lengths(points: usize, labels: usize) -> Result<(), ClusteringError> {
    if points != labels {
        return Err(ClusteringError::LengthMismatch(format!("{points} points, {labels} labels")));
    }
    Ok(())
}

fn cluster_count(labels: &[usize]) -> Result<usize, ClusteringError> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut seen = vec![false; k];
    labels.iter().for_each(|&l| seen[l] = true);
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(ClusteringError::SingleCluster);
    }
    Ok(k)
}

/// Mean silhouette coefficient; members of singleton clusters score 0.
pub fn silhouette(points: &[[f64; 2]], labels: &[usize]) -> Result<f64, ClusteringError> {
    check_lengths(points.len(), labels.len())?;
    let k = cluster_count(labels)?;
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&l| sizes[l] += 1);
    let total = par::ordered_sum(points.len(), |i| {
        let own = labels[i];
        if sizes[own] < 2 {
            return 0.0;
        }
        let mut sums = vec![0.0; k];
        for (j, p) in points.iter().enumerate() {
            sums[labels[j]] += dist(&points[i], p);
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            (b - a) / m
        } else {
            0.0
        }
    });
    Ok(total / points.len() as f64)
}

/// Davies-Bouldin index. Pairs of clusters with coincident centroids
/// contribute 0, as in the common reference implementation.
pub fn davies_bouldin(points: &[[f64; 2]], labels: &[usize]) -> Result<f64, ClusteringError> {
    check_lengths(points.len(), labels.len())?;
    let k = cluster_count(labels)?;
    let mut sizes = vec![0usize; k];
    let mut sums = vec![[0.0f64; 2]; k];
    for (p, &l) in points.iter().zip(labels) {
        sizes[l] += 1;
        sums[l][0] += p[0];
        sums[l][1] += p[1];
    }
    let present: Vec<usize> = (0..k).filter(|&c| sizes[c] > 0).collect();
    let centroids: Vec<[f64; 2]> = (0..k)
        .map(|c| {
            let n = sizes[c].max(1) as f64;
            [sums[c][0] / n, sums[c][1] / n]
        })
        .collect();
    let mut scatter = vec![0.0; k];
    for (p, &l) in points.iter().zip(labels) {
        scatter[l] += dist(p, &centroids[l]);
    }
    for c in &present {
        scatter[*c] /= sizes[*c] as f64;
    }
    let mut total = 0.0;
    for &i in &present {
        let worst = present
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| {
                let d = dist(&centroids[i], &centroids[j]);
                if d > 0.0 {
                    (scatter[i] + scatter[j]) / d
                } else {
                    0.0
                }
            })
            .fold(0.0f64, f64::max);
        total += worst;
    }
    Ok(total / present.len() as f64)
}

/// First letter of an ATC code, upper-cased, if it is alphabetic.
pub fn atc_level1(code: &str) -> Option<char> {
    code.trim().chars().next().filter(char::is_ascii_alphabetic).map(|c| c.to_ascii_uppercase())
}

/// Per-cluster class counts over drugs that carry a class.
fn class_counts(labels: &[usize], atc: &[Option<char>]) -> Result<BTreeMap<usize, BTreeMap<char, usize>>, ClusteringError> {
    if labels.len() != atc.len() {
        return Err(ClusteringError::LengthMismatch(format!(
            "{} labels, {} ATC entries",
            labels.len(),
            atc.len()
        )));
    }
    let mut out: BTreeMap<usize, BTreeMap<char, usize>> = BTreeMap::new();
    for (&l, a) in labels.iter().zip(atc) {
        if let Some(c) = a {
            *out.entry(l).or_default().entry(*c).or_default() += 1;
        }
    }
    if out.is_empty() {
        return Err(ClusteringError::NoAtcCodes);
    }
    Ok(out)
}

/// Majority-class fraction over ATC-coded drugs in clusters holding at least
/// `min_size` coded drugs.
pub fn trimmed_purity(labels: &[usize], atc: &[Option<char>], min_size: usize) -> Result<f64, ClusteringError> {
    let counts = class_counts(labels, atc)?;
    let (mut majority, mut total) = (0usize, 0usize);
    for classes in counts.values() {
        let n: usize = classes.values().sum();
        if n < min_size {
            continue;
        }
        majority += classes.values().max().copied().unwrap_or(0);
        total += n;
    }
    if total == 0 {
        return Err(ClusteringError::NoEligibleClusters);
    }
    Ok(majority as f64 / total as f64)
}

/// Size-weighted mean of KL(cluster class distribution || global class
/// distribution) in nats, with `epsilon` added to every probability before
/// renormalising. Every cluster with a coded drug takes part.
pub fn kl_alignment(labels: &[usize], atc: &[Option<char>], epsilon: f64) -> Result<f64, ClusteringError> {
    if !(epsilon > 0.0) {
        return Err(ClusteringError::InvalidParameter("KL smoothing must be positive".into()));
    }
    let counts = class_counts(labels, atc)?;
    let mut global: BTreeMap<char, usize> = BTreeMap::new();
    for classes in counts.values() {
        for (&c, &n) in classes {
            *global.entry(c).or_default() += n;
        }
    }
    let smooth = |dist: &BTreeMap<char, usize>| -> Vec<f64> {
        let n: usize = dist.values().sum();
        let raw: Vec<f64> = global
            .keys()
            .map(|c| dist.get(c).copied().unwrap_or(0) as f64 / n as f64 + epsilon)
            .collect();
        let z: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / z).collect()
    };
    let q = smooth(&global);
    let total: usize = global.values().sum();
    let mut acc = 0.0;
    for classes in counts.values() {
        let p = smooth(classes);
        let kl: f64 = p.iter().zip(&q).map(|(pi, qi)| pi * (pi / qi).ln()).sum();
        let n: usize = classes.values().sum();
        acc += n as f64 / total as f64 * kl;
    }
    Ok(acc.max(0.0))
}

/// All quality metrics; ATC-based ones only when classes are supplied, and
/// purity left out when trimming removes every cluster.
pub fn quality_report(
    points: &[[f64; 2]],
    labels: &[usize],
    atc: Option<&[Option<char>]>,
    min_size: usize,
) -> Result<QualityReport, ClusteringError> {
    let silhouette = silhouette(points, labels)?;
    let davies_bouldin = davies_bouldin(points, labels)?;
    let (trimmed_purity, kl_divergence) = match atc {
        Some(atc) if atc.iter().any(Option::is_some) => {
            let purity = match trimmed_purity(labels, atc, min_size) {
                Ok(p) => Some(p),
                Err(ClusteringError::NoEligibleClusters) => None,
                Err(e) => return Err(e),
            };
            (purity, Some(kl_alignment(labels, atc, DEFAULT_KL_EPSILON)?))
        }
        _ => (None, None),
    };
    Ok(QualityReport {
        silhouette,
        davies_bouldin,
        trimmed_purity,
        kl_divergence,
    })
}
