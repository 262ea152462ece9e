//! Drug records, interaction pairs, frequency buckets and the stratified
//! train/valid/test split.

mod io;
mod split;

pub use io::{ingest_drugs, ingest_pairs, read_catalog, write_catalog, write_drugs, write_pairs, DRUG_FIXED_COLUMNS};
pub use split::{allocate_class, stratified_split, SplitAssignment, SPLIT_RATIOS};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::ClusterAssignment;

pub const FEATURE_DIM: usize = 50;
pub const RARE_BELOW: usize = 15;
pub const COMMON_ABOVE: usize = 50;
pub const DEFAULT_MIN_CLASS: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(String),
    #[error("malformed row {row}: {msg}")]
    MalformedRow { row: u64, msg: String },
    #[error("row {row} has {found} feature values, expected {FEATURE_DIM}")]
    FeatureDimensionMismatch { row: u64, found: usize },
    #[error("duplicate drug id {0:?}")]
    DuplicateDrug(String),
    #[error("pair {pair} references unknown drug {id:?}")]
    UnknownDrug { pair: usize, id: String },
    #[error("pair {pair} has event {event} outside the catalog of {classes}")]
    EventOutOfRange { pair: usize, event: usize, classes: usize },
    #[error("event {event} has {count} pairs, need at least 2 to split")]
    ClassTooSmall { event: usize, count: usize },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bad JSON: {0}")]
    Json(String),
}

impl From<std::io::Error> for DatasetError {
    fn from(e: std::io::Error) -> Self {
        DatasetError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrugRecord {
    pub id: String,
    pub smiles: String,
    /// Absent when the structure falls outside the supported subset; the drug
    /// then only has its description modality.
    pub selfies: Option<String>,
    pub description: String,
    pub features: Option<Vec<f64>>,
    pub atc_code: Option<String>,
    /// Cluster label under the active strategy.
    pub drug_type: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InteractionPair {
    pub drug_a: usize,
    pub drug_b: usize,
    pub event: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyBucket {
    Common,
    Few,
    Rare,
}

impl FrequencyBucket {
    pub const ALL: [FrequencyBucket; 3] = [FrequencyBucket::Common, FrequencyBucket::Few, FrequencyBucket::Rare];

    /// Rare below 15, Few for 15..=50, Common above 50.
    pub fn for_count(count: usize) -> Self {
        if count < RARE_BELOW {
            FrequencyBucket::Rare
        } else if count <= COMMON_ABOVE {
            FrequencyBucket::Few
        } else {
            FrequencyBucket::Common
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FrequencyBucket::Common => "common",
            FrequencyBucket::Few => "few",
            FrequencyBucket::Rare => "rare",
        }
    }
}

impl fmt::Display for FrequencyBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FrequencyBucket {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FrequencyBucket::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| DatasetError::InvalidParameter(format!("unknown bucket {s:?}")))
    }
}

/// Event index to label text.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventCatalog {
    labels: BTreeMap<usize, String>,
}

impl EventCatalog {
    pub fn new(labels: BTreeMap<usize, String>) -> Self {
        EventCatalog { labels }
    }

    /// Number of classes, taken as one past the largest index.
    pub fn len(&self) -> usize {
        self.labels.keys().next_back().map_or(0, |k| k + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, event: usize) -> Option<&str> {
        self.labels.get(&event).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &str)> {
        self.labels.iter().map(|(k, v)| (*k, v.as_str()))
    }
}

pub fn event_counts(pairs: &[InteractionPair]) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for p in pairs {
        *counts.entry(p.event).or_insert(0) += 1;
    }
    counts
}

pub fn bucket_events(pairs: &[InteractionPair]) -> BTreeMap<usize, FrequencyBucket> {
    event_counts(pairs)
        .into_iter()
        .map(|(e, c)| (e, FrequencyBucket::for_count(c)))
        .collect()
}

/// Drops every pair whose event has fewer than `min_count` pairs.
pub fn filter_min_class(pairs: &[InteractionPair], min_count: usize) -> Vec<InteractionPair> {
    let counts = event_counts(pairs);
    pairs.iter().copied().filter(|p| counts[&p.event] >= min_count).collect()
}

/// Removes exact repeats, keeping the first occurrence.
pub fn dedup_pairs(pairs: &[InteractionPair]) -> Vec<InteractionPair> {
    let mut seen = HashSet::new();
    pairs.iter().copied().filter(|p| seen.insert(*p)).collect()
}

/// Overwrites every drug's type with the assignment's label.
pub fn attach_types(drugs: &mut [DrugRecord], assignment: &ClusterAssignment) -> Result<(), DatasetError> {
    if drugs.len() != assignment.len() {
        return Err(DatasetError::LengthMismatch(format!(
            "{} drugs, {} labels",
            drugs.len(),
            assignment.len()
        )));
    }
    for (d, &l) in drugs.iter_mut().zip(assignment.labels()) {
        d.drug_type = Some(l);
    }
    Ok(())
}

/// Drugs, their interactions and the event catalog. Pairs refer to drugs by
/// position in `drugs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub drugs: Vec<DrugRecord>,
    pub pairs: Vec<InteractionPair>,
    pub catalog: EventCatalog,
}

impl Dataset {
    /// Resolves raw `(id_a, id_b, event)` triples against `drugs`, checks
    /// event range and removes exact duplicates.
    pub fn assemble(
        drugs: Vec<DrugRecord>,
        raw_pairs: &[(String, String, usize)],
        catalog: EventCatalog,
    ) -> Result<Self, DatasetError> {
        let mut index = HashMap::with_capacity(drugs.len());
        for (i, d) in drugs.iter().enumerate() {
            if index.insert(d.id.as_str(), i).is_some() {
                return Err(DatasetError::DuplicateDrug(d.id.clone()));
            }
        }
        let classes = catalog.len();
        let mut pairs = Vec::with_capacity(raw_pairs.len());
        for (n, (a, b, e)) in raw_pairs.iter().enumerate() {
            let resolve = |id: &String| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| DatasetError::UnknownDrug { pair: n, id: id.clone() })
            };
            if *e >= classes {
                return Err(DatasetError::EventOutOfRange {
                    pair: n,
                    event: *e,
                    classes,
                });
            }
            pairs.push(InteractionPair {
                drug_a: resolve(a)?,
                drug_b: resolve(b)?,
                event: *e,
            });
        }
        Ok(Dataset {
            drugs,
            pairs: dedup_pairs(&pairs),
            catalog,
        })
    }

    pub fn atc_level1(&self) -> Vec<Option<char>> {
        self.drugs
            .iter()
            .map(|d| d.atc_code.as_deref().and_then(crate::clustering::atc_level1))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_boundaries() {
        assert_eq!(FrequencyBucket::for_count(0), FrequencyBucket::Rare);
        assert_eq!(FrequencyBucket::for_count(14), FrequencyBucket::Rare);
        assert_eq!(FrequencyBucket::for_count(15), FrequencyBucket::Few);
        assert_eq!(FrequencyBucket::for_count(50), FrequencyBucket::Few);
        assert_eq!(FrequencyBucket::for_count(51), FrequencyBucket::Common);
    }

    fn pair(a: usize, b: usize, e: usize) -> InteractionPair {
        InteractionPair {
            drug_a: a,
            drug_b: b,
            event: e,
        }
    }

    #[test]
    fn min_class_filter() {
        let pairs = vec![pair(0, 1, 0), pair(1, 2, 1), pair(0, 2, 1)];
        assert_eq!(filter_min_class(&pairs, 2), vec![pair(1, 2, 1), pair(0, 2, 1)]);
        assert!(filter_min_class(&[], 2).is_empty());
    }

    fn drug(id: &str) -> DrugRecord {
        DrugRecord {
            id: id.into(),
            smiles: "C".into(),
            selfies: Some("[C]".into()),
            description: String::new(),
            features: None,
            atc_code: None,
            drug_type: None,
        }
    }

    #[test]
    fn attach_replaces_labels() {
        let mut drugs = vec![drug("a"), drug("b")];
        attach_types(&mut drugs, &ClusterAssignment::from_labels(&[0, 0])).unwrap();
        assert!(drugs.iter().all(|d| d.drug_type == Some(0)));
        attach_types(&mut drugs, &ClusterAssignment::from_labels(&[0, 1])).unwrap();
        assert_eq!(drugs[1].drug_type, Some(1));
        assert!(matches!(
            attach_types(&mut drugs, &ClusterAssignment::from_labels(&[0])),
            Err(DatasetError::LengthMismatch(_))
        ));
    }

    #[test]
    fn assemble_resolves_and_dedups() {
        let catalog = EventCatalog::new([(0, "x".to_string()), (1, "y".to_string())].into());
        let raw = vec![
            ("a".to_string(), "b".to_string(), 1),
            ("a".to_string(), "b".to_string(), 1),
            ("b".to_string(), "a".to_string(), 0),
        ];
        let ds = Dataset::assemble(vec![drug("a"), drug("b")], &raw, catalog.clone()).unwrap();
        assert_eq!(ds.pairs, vec![pair(0, 1, 1), pair(1, 0, 0)]);
        let bad = vec![("a".to_string(), "zz".to_string(), 0)];
        assert!(matches!(
            Dataset::assemble(vec![drug("a")], &bad, catalog.clone()),
            Err(DatasetError::UnknownDrug { pair: 0, .. })
        ));
        let out = vec![("a".to_string(), "a".to_string(), 5)];
        assert!(matches!(
            Dataset::assemble(vec![drug("a")], &out, catalog),
            Err(DatasetError::EventOutOfRange { event: 5, .. })
        ));
    }
}
