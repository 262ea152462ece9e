//! Desk-scale stand-in for the fine-tuned language model: multinomial
//! logistic regression over hashed prompt text, trained by seeded mini-batch
//! gradient descent with the strategy's batch size and learning rate.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{compute_metrics, EvalError, Evaluator, Hyperparams, Metrics, PromptSets};
use crate::chem::fnv1a;
use crate::prompt::PromptInstance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    pub hash_dim: usize,
    pub max_epochs: usize,
    /// Epochs without validation-loss improvement before stopping.
    pub patience: usize,
    /// Multiplier on the strategy learning rate. The searched rates are
    /// sized for fine-tuning a large model and barely move a linear one.
    pub lr_scale: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            hash_dim: 4096,
            max_epochs: 30,
            patience: 2,
            lr_scale: 1000.0,
        }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.hash_dim == 0 || self.hash_dim > u32::MAX as usize {
            return Err(EvalError::InvalidConfig(format!("hash_dim {} out of range", self.hash_dim)));
        }
        if self.patience == 0 || self.max_epochs == 0 {
            return Err(EvalError::InvalidConfig("patience and max_epochs must be at least 1".into()));
        }
        if !(self.lr_scale > 0.0 && self.lr_scale.is_finite()) {
            return Err(EvalError::InvalidConfig("lr_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Sorted `(index, value)` pairs with distinct indices.
pub type SparseVector = Vec<(u32, f64)>;

fn bucket(prefix: u8, bytes: &[u8], dim: usize) -> u32 {
    let mut buf = Vec::with_capacity(bytes.len() + 1);
    buf.push(prefix);
    buf.extend_from_slice(bytes);
    (fnv1a(&buf) % dim as u64) as u32
}

/// Word-unigram and character-trigram counts hashed into `dim` slots, then
/// scaled to unit length. Empty text gives the empty (zero) vector.
pub fn surrogate_features(text: &str, dim: usize) -> SparseVector {
    let lower = text.to_lowercase();
    let mut idx: Vec<u32> = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| bucket(b'w', t.as_bytes(), dim))
        .collect();
    let chars: Vec<char> = lower.chars().collect();
    let mut tri = String::new();
    for w in chars.windows(3) {
        tri.clear();
        tri.extend(w);
        idx.push(bucket(b'c', tri.as_bytes(), dim));
    }
    idx.sort_unstable();
    let mut out: SparseVector = Vec::new();
    for i in idx {
        match out.last_mut() {
            Some((j, v)) if *j == i => *v += 1.0,
            _ => out.push((i, 1.0)),
        }
    }
    let norm = out.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        out.iter_mut().for_each(|(_, v)| *v /= norm);
    }
    out
}

/// Per-epoch losses of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub train_loss: Vec<f64>,
    pub valid_loss: Vec<f64>,
    /// Zero-based epoch whose weights were kept.
    pub best_epoch: usize,
}

struct Model {
    k: usize,
    dim: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

impl Model {
    fn probs(&self, x: &[(u32, f64)], out: &mut [f64]) {
        out.copy_from_slice(&self.b);
        for &(j, v) in x {
            let j = j as usize;
            for (c, o) in out.iter_mut().enumerate() {
                *o += self.w[c * self.dim + j] * v;
            }
        }
        let m = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for o in out.iter_mut() {
            *o = (*o - m).exp();
            z += *o;
        }
        out.iter_mut().for_each(|o| *o /= z);
    }

    fn mean_loss(&self, xs: &[SparseVector], ys: &[usize]) -> f64 {
        let mut p = vec![0.0; self.k];
        let total: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| {
                self.probs(x, &mut p);
                -p[y].max(1e-300).ln()
            })
            .sum();
        total / xs.len() as f64
    }

    fn predict(&self, x: &[(u32, f64)]) -> usize {
        let mut p = vec![0.0; self.k];
        self.probs(x, &mut p);
        let mut best = 0;
        for c in 1..self.k {
            if p[c] > p[best] {
                best = c;
            }
        }
        best
    }
}

pub struct SurrogateEvaluator {
    config: SurrogateConfig,
}

impl SurrogateEvaluator {
    pub fn new(config: SurrogateConfig) -> Self {
        SurrogateEvaluator { config }
    }

    pub fn config(&self) -> &SurrogateConfig {
        &self.config
    }

    fn featurize(&self, set: &[PromptInstance]) -> (Vec<SparseVector>, Vec<usize>) {
        set.iter()
            .map(|p| (surrogate_features(&p.text, self.config.hash_dim), p.gold))
            .unzip()
    }

    /// Trains, early-stops on validation loss and scores the test set with
    /// the best epoch's weights.
    pub fn train_eval_traced(
        &self,
        sets: &PromptSets,
        hyper: &Hyperparams,
        seed: u64,
    ) -> Result<(Metrics, TrainingTrace), EvalError> {
        self.config.validate()?;
        sets.validate()?;
        if hyper.batch_size == 0 || !(hyper.learning_rate > 0.0) || !(0.0..1.0).contains(&hyper.dropout) {
            return Err(EvalError::InvalidConfig(format!("unusable hyperparameters {hyper:?}")));
        }
        let (k, dim) = (sets.num_classes, self.config.hash_dim);
        let (xtr, ytr) = self.featurize(&sets.train);
        let (xva, yva) = self.featurize(&sets.valid);
        let (xte, yte) = self.featurize(&sets.test);

        let mut model = Model {
            k,
            dim,
            w: vec![0.0; k * dim],
            b: vec![0.0; k],
        };
        let lr = hyper.learning_rate * self.config.lr_scale;
        let keep = 1.0 - hyper.dropout;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..xtr.len()).collect();
        let mut trace = TrainingTrace {
            train_loss: Vec::new(),
            valid_loss: Vec::new(),
            best_epoch: 0,
        };
        let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
        let mut stale = 0;
        let mut p = vec![0.0; k];
        for epoch in 0..self.config.max_epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(hyper.batch_size) {
                let scale = lr / batch.len() as f64;
                let mut steps: Vec<(SparseVector, Vec<f64>)> = Vec::with_capacity(batch.len());
                for &i in batch {
                    let x: SparseVector = xtr[i]
                        .iter()
                        .filter(|_| hyper.dropout == 0.0 || rng.random::<f64>() < keep)
                        .map(|&(j, v)| (j, v / keep))
                        .collect();
                    model.probs(&x, &mut p);
                    let mut g = p.clone();
                    g[ytr[i]] -= 1.0;
                    steps.push((x, g));
                }
                for (x, g) in steps {
                    for (c, gc) in g.iter().enumerate() {
                        let row = &mut model.w[c * dim..(c + 1) * dim];
                        for &(j, v) in &x {
                            row[j as usize] -= scale * gc * v;
                        }
                        model.b[c] -= scale * gc;
                    }
                }
            }
            trace.train_loss.push(model.mean_loss(&xtr, &ytr));
            let vl = model.mean_loss(&xva, &yva);
            trace.valid_loss.push(vl);
            if best.as_ref().is_none_or(|(b, _, _)| vl < *b) {
                best = Some((vl, model.w.clone(), model.b.clone()));
                trace.best_epoch = epoch;
                stale = 0;
            } else {
                stale += 1;
                if stale >= self.config.patience {
                    break;
                }
            }
        }
        let (best_loss, w, b) = best.expect("at least one epoch ran");
        model.w = w;
        model.b = b;
        let preds: Vec<usize> = xte.iter().map(|x| model.predict(x)).collect();
        let mut m = compute_metrics(&preds, &yte, k)?;
        m.validation_loss = best_loss;
        Ok((m, trace))
    }
}

impl Evaluator for SurrogateEvaluator {
    fn train_eval(&self, sets: &PromptSets, hyper: &Hyperparams, seed: u64) -> Result<Metrics, EvalError> {
        self.train_eval_traced(sets, hyper, seed).map(|(m, _)| m)
    }

    fn fingerprint(&self) -> String {
        let c = &self.config;
        format!(
            "surrogate:dim={}:epochs={}:patience={}:lr_scale={}",
            c.hash_dim, c.max_epochs, c.patience, c.lr_scale
        )
    }
}
