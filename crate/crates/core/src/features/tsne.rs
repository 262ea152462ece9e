//! Exact t-SNE (O(n²) per iteration) with the classic optimiser: early
//! exaggeration, momentum switch and per-coordinate adaptive gains.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Embedding2D, FeatureError, FeatureMatrix};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    pub learning_rate: f64,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch: usize,
    pub init_std: f64,
    pub min_gain: f64,
    /// z-score each input column before computing affinities
    pub standardize: bool,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            learning_rate: 200.0,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            init_std: 1e-4,
            min_gain: 0.01,
            standardize: true,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneResult {
    pub embedding: Embedding2D,
    /// KL divergence (un-exaggerated P) when early exaggeration ends.
    pub kl_after_exaggeration: f64,
    pub final_kl: f64,
    /// Calibrated Gaussian bandwidth per input row.
    pub sigmas: Vec<f64>,
}

const CALIBRATION_STEPS: usize = 64;
const PERPLEXITY_TOL: f64 = 1e-5;

pub fn squared_distances(x: &FeatureMatrix) -> Vec<f64> {
    let n = x.rows();
    let mut d = vec![0.0; n * n];
    par::for_each_row_mut(&mut d, n.max(1), |i, row| {
        let xi = x.row(i);
        for (j, out) in row.iter_mut().enumerate() {
            *out = xi.iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
        }
    });
    d
}

/// Entropy (nats) of the conditional distribution for bandwidth `exp(log_sigma)`,
/// and the unnormalised weights.
fn row_entropy(dist: &[f64], skip: usize, dmin: f64, log_sigma: f64, weights: &mut [f64]) -> f64 {
    let beta = 0.5 * (-2.0 * log_sigma).exp();
    let mut z = 0.0;
    let mut wd = 0.0;
    for (j, (w, &d)) in weights.iter_mut().zip(dist).enumerate() {
        if j == skip {
            *w = 0.0;
            continue;
        }
        let shifted = d - dmin;
        *w = (-shifted * beta).exp();
        z += *w;
        wd += *w * shifted;
    }
    weights.iter_mut().for_each(|w| *w /= z);
    z.ln() + beta * wd / z
}

/// Row-normalised conditional affinities p(j|i) with each row's perplexity
/// matched by bisection on log sigma. Returns `(P_cond, sigmas)`.
pub fn conditional_affinities(dist: &[f64], n: usize, perplexity: f64) -> Result<(Vec<f64>, Vec<f64>), FeatureError> {
    if !(perplexity > 1.0) || perplexity > (n.saturating_sub(1)) as f64 {
        return Err(FeatureError::InvalidParameter(format!(
            "perplexity {perplexity} outside (1, {}]",
            n.saturating_sub(1)
        )));
    }
    let target = perplexity.ln();
    let rows: Vec<Result<(Vec<f64>, f64), FeatureError>> = par::map_range(n, |i| {
        let d = &dist[i * n..(i + 1) * n];
        let dmin = d
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| v)
            .fold(f64::INFINITY, f64::min);
        let mut w = vec![0.0; n];
        let (mut lo, mut hi) = (-40.0f64, 40.0f64);
        let mut log_sigma = 0.0;
        for _ in 0..CALIBRATION_STEPS {
            let h = row_entropy(d, i, dmin, log_sigma, &mut w);
            if (h.exp() - perplexity).abs() <= PERPLEXITY_TOL {
                return Ok((w, log_sigma.exp()));
            }
            if h > target {
                hi = log_sigma;
            } else {
                lo = log_sigma;
            }
            log_sigma = 0.5 * (lo + hi);
        }
        let h = row_entropy(d, i, dmin, log_sigma, &mut w);
        if (h.exp() - perplexity).abs() <= PERPLEXITY_TOL {
            Ok((w, log_sigma.exp()))
        } else {
            Err(FeatureError::PerplexityCalibration {
                row: i,
                achieved: h.exp(),
                target: perplexity,
            })
        }
    });
    let mut p = Vec::with_capacity(n * n);
    let mut sigmas = Vec::with_capacity(n);
    for r in rows {
        let (w, s) = r?;
        p.extend(w);
        sigmas.push(s);
    }
    Ok((p, sigmas))
}

/// Symmetric joint affinities P_ij = (p(j|i) + p(i|j)) / 2n.
pub fn joint_affinities(x: &FeatureMatrix, perplexity: f64) -> Result<(Vec<f64>, Vec<f64>), FeatureError> {
    let n = x.rows();
    let dist = squared_distances(x);
    let (cond, sigmas) = conditional_affinities(&dist, n, perplexity)?;
    let denom = 2.0 * n as f64;
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (cond[i * n + j] + cond[j * n + i]) / denom;
        }
    }
    Ok((p, sigmas))
}

fn kernel(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    1.0 / (1.0 + dx * dx + dy * dy)
}

/// Normaliser Z = sum over i != j of the Student-t kernel.
fn kernel_total(y: &[[f64; 2]]) -> f64 {
    par::ordered_sum(y.len(), |i| {
        y.iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, yj)| kernel(&y[i], yj))
            .sum()
    })
}

/// KL(P || Q) for the embedding `y`.
pub fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let z = kernel_total(y);
    par::ordered_sum(n, |i| {
        let mut acc = 0.0;
        for j in 0..n {
            let pij = p[i * n + j];
            if j == i || pij <= 0.0 {
                continue;
            }
            let q = kernel(&y[i], &y[j]) / z;
            acc += pij * (pij / q).ln();
        }
        acc
    })
}

/// Analytic gradient of the KL objective, with P scaled by `exaggeration`.
pub fn kl_gradient_scaled(p: &[f64], y: &[[f64; 2]], exaggeration: f64) -> Vec<[f64; 2]> {
    let n = y.len();
    let z = kernel_total(y);
    par::map_range(n, |i| {
        let mut g = [0.0, 0.0];
        for j in 0..n {
            if j == i {
                continue;
            }
            let num = kernel(&y[i], &y[j]);
            let mult = 4.0 * (exaggeration * p[i * n + j] - num / z) * num;
            g[0] += mult * (y[i][0] - y[j][0]);
            g[1] += mult * (y[i][1] - y[j][1]);
        }
        g
    })
}

pub fn kl_gradient(p: &[f64], y: &[[f64; 2]]) -> Vec<[f64; 2]> {
    kl_gradient_scaled(p, y, 1.0)
}

/// Embeds the rows of `x` in two dimensions.
pub fn tsne(x: &FeatureMatrix, config: &TsneConfig) -> Result<TsneResult, FeatureError> {
    let n = x.rows();
    if n < 10 {
        return Err(FeatureError::DegenerateInput(format!("t-SNE needs at least 10 rows, got {n}")));
    }
    if config.perplexity >= n as f64 / 3.0 {
        return Err(FeatureError::InvalidParameter(format!(
            "perplexity {} must be below rows/3 = {:.3}",
            config.perplexity,
            n as f64 / 3.0
        )));
    }
    let input = if config.standardize {
        x.standardized()
    } else {
        x.clone()
    };
    let (p, sigmas) = joint_affinities(&input, config.perplexity)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            [a * config.init_std, b * config.init_std]
        })
        .collect();
    let mut update = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut kl_after_exaggeration = None;

    for iter in 0..config.iterations {
        let exaggeration = if iter < config.exaggeration_iterations {
            config.early_exaggeration
        } else {
            1.0
        };
        let momentum = if iter < config.momentum_switch {
            config.initial_momentum
        } else {
            config.final_momentum
        };
        let grad = kl_gradient_scaled(&p, &y, exaggeration);
        for i in 0..n {
            for d in 0..2 {
                let g = grad[i][d];
                let gain = &mut gains[i][d];
                if (g > 0.0) != (update[i][d] > 0.0) {
                    *gain += 0.2;
                } else {
                    *gain *= 0.8;
                }
                *gain = gain.max(config.min_gain);
                update[i][d] = momentum * update[i][d] - config.learning_rate * *gain * g;
                y[i][d] += update[i][d];
            }
        }
        let mut centre = [0.0, 0.0];
        for pt in &y {
            centre[0] += pt[0];
            centre[1] += pt[1];
        }
        centre[0] /= n as f64;
        centre[1] /= n as f64;
        for pt in &mut y {
            pt[0] -= centre[0];
            pt[1] -= centre[1];
        }
        if iter + 1 == config.exaggeration_iterations {
            kl_after_exaggeration = Some(kl_divergence(&p, &y));
        }
    }
    let final_kl = kl_divergence(&p, &y);
    Ok(TsneResult {
        embedding: Embedding2D::new(y)?,
        kl_after_exaggeration: kl_after_exaggeration.unwrap_or(final_kl),
        final_kl,
        sigmas,
    })
}
