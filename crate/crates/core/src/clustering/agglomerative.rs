//! Hierarchical clustering by the nearest-neighbour chain algorithm with
//! Lance-Williams distance updates. All four linkages are reducible, so the
//! chain yields the same dendrogram as greedy closest-pair merging once the
//! merges are sorted by height.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{check_k, dist, ClusterAssignment, ClusteringError};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Ward,
    Single,
    Complete,
    Average,
}

impl Linkage {
    pub const ALL: [Linkage; 4] = [Linkage::Ward, Linkage::Single, Linkage::Complete, Linkage::Average];

    pub fn name(self) -> &'static str {
        match self {
            Linkage::Ward => "ward",
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        }
    }

    /// Distance from `k` to the union of `i` and `j`.
    fn update(self, dki: f64, dkj: f64, dij: f64, ni: f64, nj: f64, nk: f64) -> f64 {
        match self {
            Linkage::Single => dki.min(dkj),
            Linkage::Complete => dki.max(dkj),
            Linkage::Average => (ni * dki + nj * dkj) / (ni + nj),
            Linkage::Ward => {
                let v = ((nk + ni) * dki * dki + (nk + nj) * dkj * dkj - nk * dij * dij) / (nk + ni + nj);
                v.max(0.0).sqrt()
            }
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Linkage {
    type Err = ClusteringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Linkage::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| ClusteringError::InvalidParameter(format!("unknown linkage {s:?}")))
    }
}

/// One merge; `a` and `b` are any member indices of the two merged clusters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
}

/// Merges in non-decreasing height order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn leaves(&self) -> usize {
        self.n
    }

    /// Flat labels after applying the first `n - k` merges.
    pub fn cut(&self, k: usize) -> Result<ClusterAssignment, ClusteringError> {
        check_k(self.n, k)?;
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for m in &self.merges[..self.n - k] {
            let ra = find(&mut parent, m.a);
            let rb = find(&mut parent, m.b);
            parent[ra.max(rb)] = ra.min(rb);
        }
        let roots: Vec<usize> = (0..self.n).map(|i| find(&mut parent, i)).collect();
        Ok(ClusterAssignment::from_labels(&roots))
    }
}

/// Builds the full dendrogram. `weights` gives each input point an initial
/// cluster size (all ones for raw points); Ward then starts from the
/// size-weighted centroid distance.
pub fn linkage_tree(
    points: &[[f64; 2]],
    weights: Option<&[f64]>,
    linkage: Linkage,
) -> Result<Dendrogram, ClusteringError> {
    let n = points.len();
    if n == 0 {
        return Err(ClusteringError::TooFewPoints { rows: 0, k: 1 });
    }
    let mut size: Vec<f64> = match weights {
        Some(w) if w.len() != n => {
            return Err(ClusteringError::LengthMismatch(format!("{} weights for {n} points", w.len())))
        }
        Some(w) if w.iter().any(|&x| !(x > 0.0)) => {
            return Err(ClusteringError::InvalidParameter("weights must be positive".into()))
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; n],
    };
    let mut d = vec![0.0f64; n * n];
    par::for_each_row_mut(&mut d, n, |i, row| {
        for (j, out) in row.iter_mut().enumerate() {
            let base = dist(&points[i], &points[j]);
            *out = if linkage == Linkage::Ward {
                let (ni, nj) = (size[i], size[j]);
                (2.0 * ni * nj / (ni + nj)).sqrt() * base
            } else {
                base
            };
        }
    });

    let mut active = vec![true; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut chain: Vec<usize> = Vec::new();
    while merges.len() + 1 < n {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("two or more active clusters"));
        }
        let (a, b) = loop {
            let a = *chain.last().unwrap();
            let prev = if chain.len() >= 2 { Some(chain[chain.len() - 2]) } else { None };
            // previous chain element wins ties so the chain always terminates
            let mut best = prev;
            let mut best_d = prev.map_or(f64::INFINITY, |p| d[a * n + p]);
            for k in 0..n {
                if !active[k] || k == a {
                    continue;
                }
                let dk = d[a * n + k];
                if dk < best_d {
                    best_d = dk;
                    best = Some(k);
                }
            }
            let b = best.expect("another active cluster exists");
            if Some(b) == prev {
                break (a, b);
            }
            chain.push(b);
        };
        chain.pop();
        chain.pop();
        let dij = d[a * n + b];
        merges.push(Merge { a, b, height: dij });
        // the merged cluster keeps slot `keep`
        let (keep, drop) = (a.min(b), a.max(b));
        let (ni, nj) = (size[keep], size[drop]);
        for k in 0..n {
            if !active[k] || k == keep || k == drop {
                continue;
            }
            let v = linkage.update(d[k * n + keep], d[k * n + drop], dij, ni, nj, size[k]);
            d[k * n + keep] = v;
            d[keep * n + k] = v;
        }
        active[drop] = false;
        size[keep] = ni + nj;
    }
    merges.sort_by(|x, y| x.height.total_cmp(&y.height));
    Ok(Dendrogram { n, merges })
}

pub fn agglomerative(points: &[[f64; 2]], k: usize, linkage: Linkage) -> Result<ClusterAssignment, ClusteringError> {
    check_k(points.len(), k)?;
    linkage_tree(points, None, linkage)?.cut(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_single_linkage() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [10.0, 0.0]];
        let a = agglomerative(&pts, 2, Linkage::Single).unwrap();
        assert_eq!(a.labels(), &[0, 0, 1]);
    }

    #[test]
    fn cut_at_n_gives_singletons() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [3.0, 0.0], [7.0, 1.0]];
        for l in Linkage::ALL {
            assert_eq!(agglomerative(&pts, 4, l).unwrap().labels(), &[0, 1, 2, 3]);
        }
    }

    #[test]
    fn ward_heights_monotone() {
        let pts: Vec<[f64; 2]> = (0..60)
            .map(|i| [((i * 7919) % 101) as f64 / 10.0, ((i * 104729) % 97) as f64 / 10.0])
            .collect();
        let t = linkage_tree(&pts, None, Linkage::Ward).unwrap();
        assert_eq!(t.merges().len(), 59);
        for w in t.merges().windows(2) {
            assert!(w[0].height <= w[1].height);
        }
    }

    #[test]
    fn ward_merge_height_matches_centroid_formula() {
        // two points 2 apart: Ward height = sqrt(2*1*1/2) * 2 = 2
        let t = linkage_tree(&[[0.0, 0.0], [2.0, 0.0]], None, Linkage::Ward).unwrap();
        assert!((t.merges()[0].height - 2.0).abs() < 1e-12);
        let w = linkage_tree(&[[0.0, 0.0], [2.0, 0.0]], Some(&[3.0, 1.0]), Linkage::Ward).unwrap();
        assert!((w.merges()[0].height - (1.5f64).sqrt() * 2.0).abs() < 1e-12);
    }
}
