//! Synthetic evaluators with known answers, for exercising searchers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{enumerate_space, SearchError, Strategy, StrategyEvaluator, SPACE_SIZE};
use crate::chem::fnv1a;
use crate::clustering::{ClusterMethod, MAX_CLUSTERS, MIN_CLUSTERS};
use crate::evaluate::Metrics;

/// Amplitude of the per-strategy jitter. Smaller than the smallest penalty
/// step, which keeps the planted optimum unique.
const NOISE: f64 = 0.005;

/// F1 = 1 − (separable penalty for distance from a planted optimum) + jitter.
/// The cluster-count term is linear in |k − k*|; batch and learning rate are
/// linear in grid steps; method and modality carry fixed per-value penalties.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedLandscape {
    seed: u64,
    optimum: Strategy,
    method_penalty: [f64; 3],
    modality_penalty: f64,
    k_weight: f64,
    batch_weight: f64,
    lr_weight: f64,
}

impl PlantedLandscape {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let optimum = Strategy::from_index(rng.random_range(0..SPACE_SIZE)).expect("in range");
        let mut method_penalty = [0.0; 3];
        for (i, m) in ClusterMethod::ALL.iter().enumerate() {
            let p = rng.random_range(0.05..0.15);
            method_penalty[i] = if *m == optimum.method { 0.0 } else { p };
        }
        PlantedLandscape {
            seed,
            optimum,
            method_penalty,
            modality_penalty: rng.random_range(0.05..0.15),
            k_weight: rng.random_range(0.15..0.3),
            batch_weight: rng.random_range(0.02..0.06),
            lr_weight: rng.random_range(0.02..0.06),
        }
    }

    pub fn optimum(&self) -> Strategy {
        self.optimum
    }

    pub fn value(&self, s: &Strategy) -> f64 {
        let o = &self.optimum;
        let m = ClusterMethod::ALL.iter().position(|&x| x == s.method).expect("listed");
        let span = (MAX_CLUSTERS - MIN_CLUSTERS) as f64;
        let penalty = self.method_penalty[m]
            + if s.modality == o.modality { 0.0 } else { self.modality_penalty }
            + self.k_weight * s.n_clusters.abs_diff(o.n_clusters) as f64 / span
            + self.batch_weight * s.batch_idx.abs_diff(o.batch_idx) as f64
            + self.lr_weight * s.lr_idx.abs_diff(o.lr_idx) as f64;
        let mut key = self.seed.to_le_bytes().to_vec();
        key.extend_from_slice(&(s.index() as u64).to_le_bytes());
        let jitter = (fnv1a(&key) >> 11) as f64 / (1u64 << 53) as f64 * NOISE;
        (1.0 - penalty + jitter) * 0.8
    }

    /// Landscape value of every strategy, in index order.
    pub fn values(&self) -> Vec<f64> {
        enumerate_space().iter().map(|s| self.value(s)).collect()
    }
}

impl StrategyEvaluator for PlantedLandscape {
    fn evaluate(&self, s: &Strategy) -> Result<Metrics, SearchError> {
        let v = self.value(s);
        Ok(Metrics {
            accuracy: 0.1 + v,
            precision: v,
            recall: v,
            f1: v,
            validation_loss: 1.0 - v,
            evaluated_classes: 1,
        })
    }
}

/// Returns the same metrics for every strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantEvaluator(pub Metrics);

impl StrategyEvaluator for ConstantEvaluator {
    fn evaluate(&self, _: &Strategy) -> Result<Metrics, SearchError> {
        Ok(self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::Modality;

    #[test]
    fn optimum_is_unique_and_planted() {
        for seed in 0..20 {
            let l = PlantedLandscape::new(seed);
            let v = l.values();
            let best = (0..SPACE_SIZE).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
            assert_eq!(best, l.optimum().index());
            assert_eq!(v.iter().filter(|&&x| x == v[best]).count(), 1);
            assert!(v.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn modality_penalty_applies() {
        let l = PlantedLandscape::new(1);
        let mut s = l.optimum();
        s.modality = if s.modality == Modality::Representation {
            Modality::Description
        } else {
            Modality::Representation
        };
        assert!(l.value(&s) < l.value(&l.optimum()) - 0.03);
    }
}
