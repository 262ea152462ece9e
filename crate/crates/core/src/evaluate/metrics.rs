use serde::{Deserialize, Serialize};

use super::EvalError;

/// Prediction sentinel for outputs that name no class; always wrong.
pub const INVALID_PREDICTION: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub validation_loss: f64,
    /// Classes present in the gold labels; the macro averages run over these.
    pub evaluated_classes: usize,
}

/// Accuracy plus precision, recall and F1 macro-averaged over the classes
/// that occur in `golds`. Predictions outside `0..num_classes` count as wrong.
pub fn compute_metrics(predictions: &[usize], golds: &[usize], num_classes: usize) -> Result<Metrics, EvalError> {
    if predictions.len() != golds.len() {
        return Err(EvalError::MalformedResponse(format!(
            "{} predictions for {} golds",
            predictions.len(),
            golds.len()
        )));
    }
    if golds.is_empty() {
        return Err(EvalError::EmptySet("gold"));
    }
    if let Some(&g) = golds.iter().find(|&&g| g >= num_classes) {
        return Err(EvalError::LabelOutOfRange { label: g, num_classes });
    }
    let mut tp = vec![0u64; num_classes];
    let mut gold_n = vec![0u64; num_classes];
    let mut pred_n = vec![0u64; num_classes];
    let mut correct = 0u64;
    for (&p, &g) in predictions.iter().zip(golds) {
        gold_n[g] += 1;
        if p < num_classes {
            pred_n[p] += 1;
        }
        if p == g {
            tp[g] += 1;
            correct += 1;
        }
    }
    let (mut ps, mut rs, mut fs, mut k) = (0.0, 0.0, 0.0, 0usize);
    for c in (0..num_classes).filter(|&c| gold_n[c] > 0) {
        let p = if pred_n[c] > 0 { tp[c] as f64 / pred_n[c] as f64 } else { 0.0 };
        let r = tp[c] as f64 / gold_n[c] as f64;
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        ps += p;
        rs += r;
        fs += f;
        k += 1;
    }
    let kf = k as f64;
    Ok(Metrics {
        accuracy: correct as f64 / golds.len() as f64,
        precision: ps / kf,
        recall: rs / kf,
        f1: fs / kf,
        validation_loss: 0.0,
        evaluated_classes: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let m = compute_metrics(&[0, 1, 1, 1], &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert!((m.f1 - 11.0 / 15.0).abs() < 1e-15);
        assert!((m.precision - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!((m.recall - 0.75).abs() < 1e-15);
    }

    #[test]
    fn single_predicted_class() {
        let m = compute_metrics(&[0; 6], &[0, 0, 1, 1, 2, 2], 3).unwrap();
        assert!((m.recall - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.evaluated_classes, 3);
    }

    #[test]
    fn perfect_and_invalid() {
        let m = compute_metrics(&[2, 0, 1], &[2, 0, 1], 3).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
        let m = compute_metrics(&[INVALID_PREDICTION, 0], &[1, 0], 2).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert!(matches!(
            compute_metrics(&[0], &[5], 3),
            Err(EvalError::LabelOutOfRange { label: 5, .. })
        ));
    }
}
