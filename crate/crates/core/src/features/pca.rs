//! Principal component analysis by symmetric eigendecomposition of either the
//! covariance matrix or, when features outnumber samples, the Gram matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// k rows of length d, orthonormal.
    components: Vec<Vec<f64>>,
    explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn transform(&self, x: &FeatureMatrix) -> Result<FeatureMatrix, FeatureError> {
        if x.cols() != self.mean.len() {
            return Err(FeatureError::Shape(format!(
                "model fitted on {} columns, got {}",
                self.mean.len(),
                x.cols()
            )));
        }
        let k = self.components.len();
        let mut out = Vec::with_capacity(x.rows() * k);
        for i in 0..x.rows() {
            let row = x.row(i);
            for c in &self.components {
                out.push(row.iter().zip(&self.mean).zip(c).map(|((v, m), w)| (v - m) * w).sum());
            }
        }
        FeatureMatrix::new(x.rows(), k, out)
    }

    /// Maps projected coordinates back to the original space (mean added).
    pub fn inverse_transform(&self, z: &FeatureMatrix) -> Result<FeatureMatrix, FeatureError> {
        if z.cols() != self.components.len() {
            return Err(FeatureError::Shape(format!(
                "expected {} components, got {}",
                self.components.len(),
                z.cols()
            )));
        }
        let d = self.mean.len();
        let mut out = Vec::with_capacity(z.rows() * d);
        for i in 0..z.rows() {
            let coords = z.row(i);
            for j in 0..d {
                let v: f64 = coords.iter().zip(&self.components).map(|(c, comp)| c * comp[j]).sum();
                out.push(v + self.mean[j]);
            }
        }
        FeatureMatrix::new(z.rows(), d, out)
    }
}

fn sorted_eigen(m: DMatrix<f64>) -> Vec<(f64, Vec<f64>)> {
    let eig = SymmetricEigen::new(m);
    let mut pairs: Vec<(f64, Vec<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, eig.eigenvectors.column(i).iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn orient(v: &mut [f64]) {
    let pivot = v
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
        .map_or(0.0, |(_, x)| x);
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Vector orthogonal to every row of `basis`, from Gram-Schmidt against the
/// standard basis.
fn complete_basis(basis: &[Vec<f64>], d: usize) -> Vec<f64> {
    for j in 0..d {
        let mut v = vec![0.0; d];
        v[j] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
            }
        }
        if normalize(&mut v) > 1e-6 {
            return v;
        }
    }
    unreachable!("fewer than d basis vectors always leave a direction free")
}

/// Fits the top-`k` principal components.
pub fn pca_fit(x: &FeatureMatrix, k: usize) -> Result<PcaModel, FeatureError> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(FeatureError::DegenerateInput(format!("PCA needs at least 2 rows, got {n}")));
    }
    if k == 0 || k > (n - 1).min(d) {
        return Err(FeatureError::InvalidParameter(format!(
            "k = {k} must be in 1..={}",
            (n - 1).min(d)
        )));
    }
    let mean = x.column_means();
    let centered = DMatrix::from_fn(n, d, |i, j| x.get(i, j) - mean[j]);
    let denom = (n - 1) as f64;

    let mut components: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut variance = Vec::with_capacity(k);
    if d <= n {
        let cov = centered.transpose() * &centered / denom;
        for (lambda, mut v) in sorted_eigen(cov).into_iter().take(k) {
            normalize(&mut v);
            components.push(v);
            variance.push(lambda.max(0.0));
        }
    } else {
        let gram = &centered * centered.transpose();
        let scale = gram.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for (lambda, u) in sorted_eigen(gram).into_iter().take(k) {
            if lambda > 1e-10 * scale {
                let u = nalgebra::DVector::from_vec(u);
                let mut v: Vec<f64> = (centered.transpose() * u).iter().copied().collect();
                normalize(&mut v);
                components.push(v);
                variance.push(lambda / denom);
            } else {
                components.push(complete_basis(&components, d));
                variance.push(0.0);
            }
        }
    }
    components.iter_mut().for_each(|c| orient(c));
    Ok(PcaModel {
        mean,
        components,
        explained_variance: variance,
    })
}
