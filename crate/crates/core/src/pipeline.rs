//! Glue from a dataset to a [`StrategyEvaluator`]: feature preparation, the
//! 2D embedding, event-bucket selection, and the per-strategy chain
//! cluster → attach types → render prompts → train and evaluate.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chem::{ecfp4, ChemError};
use crate::clustering::{cluster, ClusterAssignment, ClusterMethod, ClusteringError, ClusteringSpec};
use crate::dataset::{
    attach_types, bucket_events, filter_min_class, stratified_split, Dataset, DatasetError, FrequencyBucket,
    InteractionPair, SplitAssignment, DEFAULT_MIN_CLASS, FEATURE_DIM, SPLIT_RATIOS,
};
use crate::evaluate::{cache_key, EvalCache, EvalError, Evaluator, Metrics, PromptSets};
use crate::features::{pca_fit, tsne, Embedding2D, FeatureError, FeatureMatrix, TsneConfig};
use crate::prompt::{render_all, PromptError, PromptTemplate};
use crate::search::{SearchError, Strategy, StrategyEvaluator};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("drug {0} has neither precomputed features nor a parseable SMILES: {1}")]
    NoFeatures(String, ChemError),
    #[error("{with} drugs have precomputed features and {without} do not")]
    MixedFeatures { with: usize, without: usize },
    #[error("no pairs fall in the {0} bucket")]
    EmptySelection(EventSplit),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Clustering(#[from] ClusteringError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Which events a run trains and scores on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventSplit {
    #[default]
    All,
    Common,
    Few,
    Rare,
}

impl EventSplit {
    pub const ALL: [EventSplit; 4] = [EventSplit::All, EventSplit::Common, EventSplit::Few, EventSplit::Rare];

    pub fn name(self) -> &'static str {
        match self {
            EventSplit::All => "all",
            EventSplit::Common => "common",
            EventSplit::Few => "few",
            EventSplit::Rare => "rare",
        }
    }

    fn bucket(self) -> Option<FrequencyBucket> {
        match self {
            EventSplit::All => None,
            EventSplit::Common => Some(FrequencyBucket::Common),
            EventSplit::Few => Some(FrequencyBucket::Few),
            EventSplit::Rare => Some(FrequencyBucket::Rare),
        }
    }
}

impl fmt::Display for EventSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EventSplit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EventSplit::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown split {s:?} (expected all, common, few or rare)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSource {
    /// The 50 feature columns supplied with the drugs.
    Precomputed,
    /// ECFP4 fingerprints reduced by PCA.
    Fingerprint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrepareConfig {
    pub pca_dim: usize,
    pub tsne: TsneConfig,
}

impl Default for PrepareConfig {
    fn default() -> Self {
        PrepareConfig {
            pca_dim: FEATURE_DIM,
            tsne: TsneConfig::default(),
        }
    }
}

/// Drug feature matrix: the supplied vectors when every drug has them,
/// otherwise ECFP4 bits projected onto the leading principal components.
pub fn drug_features(
    drugs: &[crate::dataset::DrugRecord],
    pca_dim: usize,
) -> Result<(FeatureMatrix, FeatureSource), PipelineError> {
    let with = drugs.iter().filter(|d| d.features.is_some()).count();
    if with == drugs.len() && with > 0 {
        let rows: Vec<&[f64]> = drugs.iter().map(|d| d.features.as_deref().expect("checked")).collect();
        return Ok((FeatureMatrix::from_rows(&rows)?, FeatureSource::Precomputed));
    }
    if with > 0 {
        return Err(PipelineError::MixedFeatures {
            with,
            without: drugs.len() - with,
        });
    }
    let bits = crate::par::map_slice(drugs, |d| {
        ecfp4(&d.smiles)
            .map(|fp| fp.to_dense())
            .map_err(|e| PipelineError::NoFeatures(d.id.clone(), e))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let x = FeatureMatrix::from_rows(&bits)?;
    let k = pca_dim.min(x.rows().saturating_sub(1)).min(x.cols());
    let model = pca_fit(&x, k)?;
    Ok((model.transform(&x)?, FeatureSource::Fingerprint))
}

/// Features plus the t-SNE embedding that clustering runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prepared {
    pub source: FeatureSource,
    pub features: Vec<Vec<f64>>,
    pub embedding: Embedding2D,
    pub kl_after_exaggeration: f64,
    pub final_kl: f64,
}

pub fn prepare(drugs: &[crate::dataset::DrugRecord], config: &PrepareConfig) -> Result<Prepared, PipelineError> {
    let (x, source) = drug_features(drugs, config.pca_dim)?;
    let t = tsne(&x, &config.tsne)?;
    Ok(Prepared {
        source,
        features: (0..x.rows()).map(|i| x.row(i).to_vec()).collect(),
        embedding: t.embedding,
        kl_after_exaggeration: t.kl_after_exaggeration,
        final_kl: t.final_kl,
    })
}

/// Pairs kept for `split`: classes with at least two pairs, restricted to
/// the events whose full-corpus count falls in the bucket.
pub fn select_pairs(pairs: &[InteractionPair], split: EventSplit) -> Result<Vec<InteractionPair>, PipelineError> {
    let kept = filter_min_class(pairs, DEFAULT_MIN_CLASS);
    let out: Vec<InteractionPair> = match split.bucket() {
        None => kept,
        Some(b) => {
            let buckets = bucket_events(&kept);
            kept.into_iter().filter(|p| buckets[&p.event] == b).collect()
        }
    };
    if out.is_empty() {
        return Err(PipelineError::EmptySelection(split));
    }
    Ok(out)
}

/// Everything a strategy evaluation needs, fixed for one run seed.
pub struct SearchContext<'a> {
    dataset: Dataset,
    embedding: Embedding2D,
    split: SplitAssignment,
    template: PromptTemplate,
    evaluator: &'a dyn Evaluator,
    cache: &'a EvalCache,
    seed: u64,
    data_hash: String,
    clusterings: Mutex<HashMap<(ClusterMethod, usize), Arc<ClusterAssignment>>>,
}

impl<'a> SearchContext<'a> {
    /// `dataset.pairs` must already be the selected pairs.
    pub fn new(
        dataset: Dataset,
        embedding: Embedding2D,
        template: PromptTemplate,
        evaluator: &'a dyn Evaluator,
        cache: &'a EvalCache,
        seed: u64,
    ) -> Result<Self, PipelineError> {
        if embedding.rows() != dataset.drugs.len() {
            return Err(DatasetError::LengthMismatch(format!(
                "{} drugs, {} embedded points",
                dataset.drugs.len(),
                embedding.rows()
            ))
            .into());
        }
        let split = stratified_split(&dataset.pairs, SPLIT_RATIOS, seed)?;
        let data_hash = data_hash(&dataset, &embedding, &split, &template);
        Ok(SearchContext {
            dataset,
            embedding,
            split,
            template,
            evaluator,
            cache,
            seed,
            data_hash,
            clusterings: Mutex::new(HashMap::new()),
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn embedding(&self) -> &Embedding2D {
        &self.embedding
    }

    pub fn split(&self) -> &SplitAssignment {
        &self.split
    }

    pub fn data_hash(&self) -> &str {
        &self.data_hash
    }

    pub fn num_classes(&self) -> usize {
        self.dataset.catalog.len()
    }

    /// Memoised per (method, cluster count).
    pub fn clustering(&self, method: ClusterMethod, k: usize) -> Result<Arc<ClusterAssignment>, PipelineError> {
        if let Some(a) = self.clusterings.lock().expect("clustering lock").get(&(method, k)) {
            return Ok(Arc::clone(a));
        }
        let a = Arc::new(cluster(&self.embedding, &ClusteringSpec::new(method, k, self.seed)?)?);
        self.clusterings
            .lock()
            .expect("clustering lock")
            .insert((method, k), Arc::clone(&a));
        Ok(a)
    }

    /// Rendered train, valid and test prompts under `strategy`.
    pub fn prompt_sets(&self, strategy: &Strategy) -> Result<PromptSets, PipelineError> {
        let labels = self.clustering(strategy.method, strategy.n_clusters)?;
        let mut drugs = self.dataset.drugs.clone();
        attach_types(&mut drugs, &labels)?;
        let k = self.num_classes();
        let render = |idx: &[usize]| {
            render_all(
                &self.template,
                idx,
                &self.dataset.pairs,
                strategy.modality,
                &drugs,
                strategy.n_clusters,
                k,
            )
        };
        Ok(PromptSets {
            train: render(&self.split.train)?,
            valid: render(&self.split.valid)?,
            test: render(&self.split.test)?,
            num_classes: k,
        })
    }

    pub fn cache_key(&self, strategy: &Strategy) -> String {
        cache_key(&strategy.to_string(), self.seed, &self.data_hash, &self.evaluator.fingerprint())
    }

    pub fn evaluate_uncached(&self, strategy: &Strategy) -> Result<Metrics, PipelineError> {
        let sets = self.prompt_sets(strategy)?;
        Ok(self.evaluator.train_eval(&sets, &strategy.hyperparams(), self.seed)?)
    }
}

impl StrategyEvaluator for SearchContext<'_> {
    fn evaluate(&self, strategy: &Strategy) -> Result<Metrics, SearchError> {
        let key = self.cache_key(strategy);
        if let Some(m) = self.cache.get(&key) {
            return Ok(m);
        }
        let m = self.evaluate_uncached(strategy).map_err(|e| match e {
            PipelineError::Eval(e) => SearchError::Evaluation(e),
            other => SearchError::Pipeline {
                strategy: strategy.to_string(),
                msg: other.to_string(),
            },
        })?;
        self.cache.insert(key, m)?;
        Ok(m)
    }
}

#[derive(Serialize)]
struct HashView<'a> {
    drugs: Vec<(&'a str, Option<&'a str>, &'a str)>,
    pairs: &'a [InteractionPair],
    num_classes: usize,
    embedding: Vec<[u64; 2]>,
    split: &'a SplitAssignment,
    template: &'a str,
}

/// SHA-256 over everything that determines a strategy's prompts.
pub fn data_hash(dataset: &Dataset, embedding: &Embedding2D, split: &SplitAssignment, template: &PromptTemplate) -> String {
    let view = HashView {
        drugs: dataset
            .drugs
            .iter()
            .map(|d| (d.id.as_str(), d.selfies.as_deref(), d.description.as_str()))
            .collect(),
        pairs: &dataset.pairs,
        num_classes: dataset.catalog.len(),
        embedding: embedding.points().iter().map(|p| [p[0].to_bits(), p[1].to_bits()]).collect(),
        split,
        template: template.body(),
    };
    let bytes = serde_json::to_vec(&view).expect("plain data serialises");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: usize, b: usize, e: usize) -> InteractionPair {
        InteractionPair {
            drug_a: a,
            drug_b: b,
            event: e,
        }
    }

    #[test]
    fn bucket_selection() {
        let mut pairs = Vec::new();
        for i in 0..60 {
            pairs.push(p(i, i + 1, 0));
        }
        for i in 0..20 {
            pairs.push(p(i, i + 2, 1));
        }
        for i in 0..3 {
            pairs.push(p(i, i + 3, 2));
        }
        pairs.push(p(0, 9, 3));
        assert_eq!(select_pairs(&pairs, EventSplit::All).unwrap().len(), 83);
        assert!(select_pairs(&pairs, EventSplit::Common).unwrap().iter().all(|q| q.event == 0));
        assert_eq!(select_pairs(&pairs, EventSplit::Few).unwrap().len(), 20);
        assert_eq!(select_pairs(&pairs, EventSplit::Rare).unwrap().len(), 3);
        assert_eq!(
            select_pairs(&pairs[..60], EventSplit::Rare),
            Err(PipelineError::EmptySelection(EventSplit::Rare))
        );
    }

    #[test]
    fn split_names_round_trip() {
        for s in EventSplit::ALL {
            assert_eq!(s.name().parse::<EventSplit>().unwrap(), s);
        }
        assert!("medium".parse::<EventSplit>().is_err());
    }
}
