//! The six comparison metrics. Binary tasks report precision, recall,
//! and F1 of the positive class; multiclass tasks report
//! support-weighted one-vs-rest averages. TPR and TNR always come from
//! the task binarized as positive class vs rest. Ratios with zero
//! denominators are reported as 0.

use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub f1: f64,
    pub recall: f64,
    pub precision: f64,
    pub tpr: f64,
    pub tnr: f64,
}

impl MetricSet {
    pub const ZERO: MetricSet = MetricSet {
        accuracy: 0.0,
        f1: 0.0,
        recall: 0.0,
        precision: 0.0,
        tpr: 0.0,
        tnr: 0.0,
    };

    pub fn mean_of(sets: &[MetricSet]) -> MetricSet {
        if sets.is_empty() {
            return MetricSet::ZERO;
        }
        let n = sets.len() as f64;
        MetricSet {
            accuracy: sets.iter().map(|m| m.accuracy).sum::<f64>() / n,
            f1: sets.iter().map(|m| m.f1).sum::<f64>() / n,
            recall: sets.iter().map(|m| m.recall).sum::<f64>() / n,
            precision: sets.iter().map(|m| m.precision).sum::<f64>() / n,
            tpr: sets.iter().map(|m| m.tpr).sum::<f64>() / n,
            tnr: sets.iter().map(|m| m.tnr).sum::<f64>() / n,
        }
    }
}

fn ratio(numerator: f64, denominator: f64) -> f64 {
    if denominator == 0.0 {
        0.0
    } else {
        numerator / denominator
    }
}

/// Compute the metric set over predicted vs true class indices.
pub fn compute_metrics(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
    positive_class: usize,
) -> Result<MetricSet> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
            context: "y_true vs y_pred",
        });
    }
    if y_true.is_empty() {
        return Err(Error::InvalidInput("empty prediction vector".to_string()));
    }

    let n = y_true.len() as f64;
    // confusion[t][p]: rows true class, columns predicted class
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        confusion[t][p] += 1;
    }

    let accuracy = (0..n_classes).map(|c| confusion[c][c]).sum::<usize>() as f64 / n;

    let class_prf = |class: usize| -> (f64, f64, f64) {
        let tp = confusion[class][class] as f64;
        let predicted: f64 = (0..n_classes).map(|t| confusion[t][class]).sum::<usize>() as f64;
        let support: f64 = confusion[class].iter().sum::<usize>() as f64;
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        (precision, recall, f1)
    };

    let (precision, recall, f1) = if n_classes == 2 {
        class_prf(positive_class)
    } else {
        let mut precision = 0.0;
        let mut recall = 0.0;
        let mut f1 = 0.0;
        for class in 0..n_classes {
            let support: f64 = confusion[class].iter().sum::<usize>() as f64;
            let (p, r, f) = class_prf(class);
            let weight = support / n;
            precision += weight * p;
            recall += weight * r;
            f1 += weight * f;
        }
        (precision, recall, f1)
    };

    // binarized positive-vs-rest rates
    let tp = confusion[positive_class][positive_class] as f64;
    let positive_support: f64 = confusion[positive_class].iter().sum::<usize>() as f64;
    let negative_support = n - positive_support;
    let fp: f64 = (0..n_classes)
        .filter(|&t| t != positive_class)
        .map(|t| confusion[t][positive_class])
        .sum::<usize>() as f64;
    let tn = negative_support - fp;
    let tpr = ratio(tp, positive_support);
    let tnr = ratio(tn, negative_support);

    Ok(MetricSet {
        accuracy,
        f1,
        recall,
        precision,
        tpr,
        tnr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions_score_one_everywhere() {
        let y = vec![0, 1, 2, 1, 0, 2];
        let m = compute_metrics(&y, &y, 3, 2).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.f1, 1.0);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.tpr, 1.0);
        assert_eq!(m.tnr, 1.0);
    }

    #[test]
    fn hand_computed_binary_case() {
        let y_true = vec![1, 0, 0, 0];
        let y_pred = vec![1, 1, 0, 0];
        let m = compute_metrics(&y_true, &y_pred, 2, 1).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.tpr, 1.0);
        assert!((m.tnr - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.recall, 1.0);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn always_negative_predictor_has_zero_tpr_unit_tnr() {
        // 55% negative data, constant negative prediction
        let mut y_true = vec![0; 55];
        y_true.extend(vec![1; 45]);
        let y_pred = vec![0; 100];
        let m = compute_metrics(&y_true, &y_pred, 2, 1).unwrap();
        assert_eq!(m.tpr, 0.0);
        assert_eq!(m.tnr, 1.0);
        assert_eq!(m.accuracy, 0.55);
        // positive-class precision and recall collapse to zero
        assert_eq!(m.precision, 0.0);
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.f1, 0.0);
    }

    #[test]
    fn multiclass_constant_predictor_matches_weighted_averages() {
        // mimic a 3-class task collapsed onto the majority class:
        // accuracy = majority share, weighted precision = share^2
        let mut y_true = vec![0; 584];
        y_true.extend(vec![1; 60]);
        y_true.extend(vec![2; 356]);
        let y_pred = vec![0; 1000];
        let m = compute_metrics(&y_true, &y_pred, 3, 2).unwrap();
        assert!((m.accuracy - 0.584).abs() < 1e-12);
        assert!((m.recall - 0.584).abs() < 1e-12);
        assert!((m.precision - 0.584 * 0.584).abs() < 1e-12);
        let f1_majority = 2.0 * 0.584 / 1.584;
        assert!((m.f1 - 0.584 * f1_majority).abs() < 1e-12);
        assert_eq!(m.tpr, 0.0);
        assert_eq!(m.tnr, 1.0);
    }

    #[test]
    fn binary_recall_of_positive_class_equals_tpr() {
        let y_true = vec![1, 1, 0, 1, 0, 0, 1, 0];
        let y_pred = vec![1, 0, 0, 1, 1, 0, 0, 1];
        let m = compute_metrics(&y_true, &y_pred, 2, 1).unwrap();
        assert_eq!(m.recall, m.tpr);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(compute_metrics(&[0, 1], &[0], 2, 1).is_err());
    }
}
