//! BIRCH: points are summarised into clustering-feature (CF) entries held in
//! a height-balanced tree, then the leaf entries are grouped by weighted Ward
//! linkage and every point inherits its entry's group.

use serde::{Deserialize, Serialize};

use super::agglomerative::{linkage_tree, Linkage};
use super::{check_k, sq_dist, ClusterAssignment, ClusteringError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BirchConfig {
    pub branching_factor: usize,
    /// Maximum radius of a leaf entry.
    pub threshold: f64,
    /// Leaf-entry budget; exceeding it doubles the threshold and rebuilds.
    pub max_leaf_entries: usize,
}

impl Default for BirchConfig {
    fn default() -> Self {
        BirchConfig {
            branching_factor: 50,
            threshold: 0.5,
            max_leaf_entries: 1024,
        }
    }
}

#[derive(Debug, Clone)]
struct Cf {
    n: f64,
    ls: [f64; 2],
    ss: f64,
    members: Vec<usize>,
}

impl Cf {
    fn point(i: usize, p: &[f64; 2]) -> Self {
        Cf {
            n: 1.0,
            ls: *p,
            ss: p[0] * p[0] + p[1] * p[1],
            members: vec![i],
        }
    }

    fn empty() -> Self {
        Cf {
            n: 0.0,
            ls: [0.0, 0.0],
            ss: 0.0,
            members: Vec::new(),
        }
    }

    fn centroid(&self) -> [f64; 2] {
        [self.ls[0] / self.n, self.ls[1] / self.n]
    }

    fn absorb(&mut self, other: &Cf) {
        self.n += other.n;
        self.ls[0] += other.ls[0];
        self.ls[1] += other.ls[1];
        self.ss += other.ss;
    }

    fn merged_radius(&self, other: &Cf) -> f64 {
        let n = self.n + other.n;
        let c = [(self.ls[0] + other.ls[0]) / n, (self.ls[1] + other.ls[1]) / n];
        ((self.ss + other.ss) / n - (c[0] * c[0] + c[1] * c[1])).max(0.0).sqrt()
    }
}

enum Node {
    Leaf(Vec<Cf>),
    Inner(Vec<(Cf, Node)>),
}

fn summary(node: &Node) -> Cf {
    let mut s = Cf::empty();
    match node {
        Node::Leaf(es) => es.iter().for_each(|e| s.absorb(e)),
        Node::Inner(cs) => cs.iter().for_each(|(c, _)| s.absorb(c)),
    }
    s
}

fn closest<'a>(target: &[f64; 2], cfs: impl Iterator<Item = &'a Cf>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, c) in cfs.enumerate() {
        let d = sq_dist(target, &c.centroid());
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Splits `items` around the farthest pair of centroids.
fn split<T>(items: Vec<T>, cf: impl Fn(&T) -> &Cf) -> (Vec<T>, Vec<T>) {
    let cents: Vec<[f64; 2]> = items.iter().map(|x| cf(x).centroid()).collect();
    let (mut s0, mut s1, mut far) = (0, 1, -1.0);
    for i in 0..cents.len() {
        for j in i + 1..cents.len() {
            let d = sq_dist(&cents[i], &cents[j]);
            if d > far {
                (s0, s1, far) = (i, j, d);
            }
        }
    }
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for (i, item) in items.into_iter().enumerate() {
        let to_left = i == s0 || (i != s1 && sq_dist(&cents[i], &cents[s0]) <= sq_dist(&cents[i], &cents[s1]));
        if to_left {
            left.push(item);
        } else {
            right.push(item);
        }
    }
    (left, right)
}

struct CfTree {
    root: Node,
    threshold: f64,
    branching: usize,
    leaf_entries: usize,
}

impl CfTree {
    fn new(threshold: f64, branching: usize) -> Self {
        CfTree {
            root: Node::Leaf(Vec::new()),
            threshold,
            branching,
            leaf_entries: 0,
        }
    }

    fn insert(&mut self, entry: Cf) {
        let root = std::mem::replace(&mut self.root, Node::Leaf(Vec::new()));
        let (a, b) = self.insert_into(root, entry);
        self.root = match b {
            None => a,
            Some(b) => Node::Inner(vec![(summary(&a), a), (summary(&b), b)]),
        };
    }

    /// Returns the updated node and, if it overflowed, its split-off sibling.
    fn insert_into(&mut self, node: Node, entry: Cf) -> (Node, Option<Node>) {
        match node {
            Node::Leaf(mut es) => {
                if !es.is_empty() {
                    let i = closest(&entry.centroid(), es.iter());
                    if es[i].merged_radius(&entry) <= self.threshold {
                        es[i].absorb(&entry);
                        es[i].members.extend(entry.members);
                        return (Node::Leaf(es), None);
                    }
                }
                es.push(entry);
                self.leaf_entries += 1;
                if es.len() > self.branching {
                    let (l, r) = split(es, |e| e);
                    (Node::Leaf(l), Some(Node::Leaf(r)))
                } else {
                    (Node::Leaf(es), None)
                }
            }
            Node::Inner(mut cs) => {
                let i = closest(&entry.centroid(), cs.iter().map(|(c, _)| c));
                let (_, child) = cs.remove(i);
                let (a, b) = self.insert_into(child, entry);
                cs.insert(i, (summary(&a), a));
                if let Some(b) = b {
                    cs.insert(i + 1, (summary(&b), b));
                }
                if cs.len() > self.branching {
                    let (l, r) = split(cs, |(c, _)| c);
                    (Node::Inner(l), Some(Node::Inner(r)))
                } else {
                    (Node::Inner(cs), None)
                }
            }
        }
    }

    fn into_leaf_entries(self) -> Vec<Cf> {
        fn walk(node: Node, out: &mut Vec<Cf>) {
            match node {
                Node::Leaf(es) => out.extend(es),
                Node::Inner(cs) => cs.into_iter().for_each(|(_, c)| walk(c, out)),
            }
        }
        let mut out = Vec::new();
        walk(self.root, &mut out);
        out
    }
}

/// Builds the CF tree, doubling the threshold whenever the leaf-entry budget
/// is exceeded, and returns the final leaf entries.
fn build_entries(points: &[[f64; 2]], config: &BirchConfig) -> Vec<Cf> {
    let mut threshold = config.threshold;
    let mut pending: Vec<Cf> = points.iter().enumerate().map(|(i, p)| Cf::point(i, p)).collect();
    loop {
        let mut tree = CfTree::new(threshold, config.branching_factor);
        let mut overflow = false;
        let mut it = pending.into_iter();
        for e in it.by_ref() {
            tree.insert(e);
            if tree.leaf_entries > config.max_leaf_entries {
                overflow = true;
                break;
            }
        }
        let rest: Vec<Cf> = it.collect();
        let entries = tree.into_leaf_entries();
        if !overflow {
            return entries;
        }
        threshold *= 2.0;
        pending = entries.into_iter().chain(rest).collect();
    }
}

pub fn birch(points: &[[f64; 2]], k: usize, config: &BirchConfig) -> Result<ClusterAssignment, ClusteringError> {
    check_k(points.len(), k)?;
    if config.branching_factor < 2 {
        return Err(ClusteringError::InvalidParameter("branching factor must be at least 2".into()));
    }
    if !(config.threshold > 0.0) || config.max_leaf_entries == 0 {
        return Err(ClusteringError::InvalidParameter(
            "threshold and leaf-entry budget must be positive".into(),
        ));
    }
    let entries = build_entries(points, config);
    if entries.len() < k {
        return Err(ClusteringError::NClustersUnreachable {
            entries: entries.len(),
            k,
        });
    }
    let centroids: Vec<[f64; 2]> = entries.iter().map(Cf::centroid).collect();
    let weights: Vec<f64> = entries.iter().map(|e| e.n).collect();
    let groups = linkage_tree(&centroids, Some(&weights), Linkage::Ward)?.cut(k)?;
    let mut labels = vec![0usize; points.len()];
    for (e, &g) in entries.iter().zip(groups.labels()) {
        for &m in &e.members {
            labels[m] = g;
        }
    }
    Ok(ClusterAssignment::from_labels(&labels))
}
