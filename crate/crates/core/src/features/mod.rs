//! Feature reduction: PCA for the 50-dimensional drug vectors and exact
//! t-SNE for the 2-D embedding that clustering runs on.

mod matrix;
mod pca;
mod tsne;

pub use matrix::{Embedding2D, FeatureMatrix};
pub use pca::{pca_fit, PcaModel};
pub use tsne::{
    conditional_affinities, joint_affinities, kl_divergence, kl_gradient, kl_gradient_scaled, squared_distances,
    tsne, TsneConfig, TsneResult,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("perplexity calibration failed for row {row}: reached {achieved}, wanted {target}")]
    PerplexityCalibration { row: usize, achieved: f64, target: f64 },
}
