use serde::{Deserialize, Serialize};

use super::FeatureError;

/// Dense row-major matrix of finite reals, one row per drug.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, FeatureError> {
        if values.len() != rows * cols {
            return Err(FeatureError::Shape(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite {
                row: i / cols.max(1),
                col: i % cols.max(1),
            });
        }
        Ok(FeatureMatrix { rows, cols, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, FeatureError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(FeatureError::Shape(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (m, v) in mean.iter_mut().zip(self.row(i)) {
                *m += v;
            }
        }
        let n = self.rows.max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Per-column z-scores (population standard deviation). Constant columns
    /// become all zeros.
    pub fn standardized(&self) -> FeatureMatrix {
        let mean = self.column_means();
        let mut var = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (j, v) in self.row(i).iter().enumerate() {
                var[j] += (v - mean[j]).powi(2);
            }
        }
        let n = self.rows.max(1) as f64;
        let sd: Vec<f64> = var.iter().map(|v| (v / n).sqrt()).collect();
        let values = (0..self.rows)
            .flat_map(|i| {
                let (mean, sd) = (&mean, &sd);
                self.row(i).iter().enumerate().map(move |(j, v)| {
                    if sd[j] > 1e-12 {
                        (v - mean[j]) / sd[j]
                    } else {
                        0.0
                    }
                })
            })
            .collect();
        FeatureMatrix {
            rows: self.rows,
            cols: self.cols,
            values,
        }
    }
}

/// Two coordinates per drug.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding2D {
    points: Vec<[f64; 2]>,
}

impl Embedding2D {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self, FeatureError> {
        if let Some(i) = points.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(FeatureError::NonFinite { row: i, col: 0 });
        }
        Ok(Embedding2D { points })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn rows(&self) -> usize {
        self.points.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan_and_ragged_rows() {
        assert!(matches!(
            FeatureMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(FeatureError::NonFinite { row: 0, col: 1 })
        ));
        assert!(FeatureMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(FeatureMatrix::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn standardize_constant_column() {
        let m = FeatureMatrix::from_rows(&[[1.0, 5.0], [3.0, 5.0]]).unwrap();
        let z = m.standardized();
        assert_eq!(z.row(0), &[-1.0, 0.0]);
        assert_eq!(z.row(1), &[1.0, 0.0]);
    }
}
