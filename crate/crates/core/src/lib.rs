//! Drug-drug interaction event prediction with clustering-derived drug types.
//!
//! The pipeline derives drug-type priors by embedding molecular features in
//! two dimensions and clustering them, renders those priors into prompts, and
//! searches the strategy space (clustering method, cluster count, molecular
//! modality, training hyperparameters) with tabular Q-learning against a
//! pluggable evaluator.

pub mod chem;
pub mod clustering;
pub mod dataset;
pub mod evaluate;
pub mod features;
pub mod par;
pub mod prompt;
pub mod search;
pub mod pipeline;
pub mod synthetic;
