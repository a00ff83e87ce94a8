//! k-nearest-neighbor classifier over standardized Euclidean distance.

use super::{KnnParams, Standardizer};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnFitted {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub standardizer: Option<Standardizer>,
}

pub fn fit(params: &KnnParams, rows: &[Vec<f64>], labels: &[usize], n_classes: usize) -> KnnFitted {
    let n_cols = rows.first().map_or(0, Vec::len);
    let standardizer = params.standardize.then(|| Standardizer::fit(rows, n_cols));
    let stored = match &standardizer {
        Some(s) => s.apply(rows),
        None => rows.to_vec(),
    };
    KnnFitted {
        k: params.k,
        rows: stored,
        labels: labels.to_vec(),
        n_classes,
        standardizer,
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Vote fractions among the k nearest training rows; distance ties
/// break toward the lower training-row index.
pub fn predict_proba(model: &KnnFitted, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|row| {
            let query = match &model.standardizer {
                Some(s) => s.apply_row(row),
                None => row.clone(),
            };
            let mut scored: Vec<(f64, usize)> = model
                .rows
                .iter()
                .enumerate()
                .map(|(i, train)| (squared_distance(&query, train), i))
                .collect();
            let k = model.k.min(scored.len());
            if k > 0 {
                scored.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap());
                scored.truncate(k);
            }
            let mut votes = vec![0.0; model.n_classes];
            for &(_, i) in &scored {
                votes[model.labels[i]] += 1.0;
            }
            let total: f64 = votes.iter().sum();
            if total > 0.0 {
                for v in &mut votes {
                    *v /= total;
                }
            }
            votes
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_nearest_neighbor_memorizes_training_set() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * 3 % 11) as f64]).collect();
        let labels: Vec<usize> = (0..20).map(|i| i % 3).collect();
        let model = fit(
            &KnnParams {
                k: 1,
                standardize: true,
            },
            &rows,
            &labels,
            3,
        );
        let probs = predict_proba(&model, &rows);
        for (p, &label) in probs.iter().zip(&labels) {
            assert_eq!(super::super::argmax(p), label);
            assert_eq!(p[label], 1.0);
        }
    }

    #[test]
    fn vote_fractions_sum_to_one() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let labels: Vec<usize> = (0..10).map(|i| usize::from(i >= 5)).collect();
        let model = fit(
            &KnnParams {
                k: 3,
                standardize: false,
            },
            &rows,
            &labels,
            2,
        );
        for p in predict_proba(&model, &rows) {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn standardization_rescales_lopsided_features() {
        // feature 0 carries the class but on a tiny scale; feature 1 is
        // large-scale noise that unstandardized distance would chase
        let rows = vec![
            vec![0.001, 500.0],
            vec![0.002, -500.0],
            vec![0.001, -480.0],
            vec![0.102, 510.0],
            vec![0.101, -490.0],
            vec![0.103, 5.0],
        ];
        let labels = vec![0, 0, 0, 1, 1, 1];
        let model = fit(
            &KnnParams {
                k: 3,
                standardize: true,
            },
            &rows,
            &labels,
            2,
        );
        let probs = predict_proba(&model, &rows);
        for (p, &label) in probs.iter().zip(&labels) {
            assert_eq!(super::super::argmax(p), label);
        }
    }
}
