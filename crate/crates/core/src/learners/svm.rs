//! Linear soft-margin SVM trained by full-batch subgradient descent on
//! the hinge loss, one-vs-rest for more than two classes.
//!
//! Features are standardized and a constant bias column is appended.
//! The objective per binary problem is lambda/2 ||w||^2 + mean hinge
//! with lambda = 1/(C n); steps follow the classic 1/(lambda t)
//! schedule with projection onto the ||w|| <= 1/sqrt(lambda) ball, and
//! the weights with the best seen objective are kept.

use super::{Standardizer, SvmParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmFitted {
    /// One weight vector per class (includes the bias as last entry).
    pub weights: Vec<Vec<f64>>,
    pub n_classes: usize,
    pub standardizer: Standardizer,
}

fn objective(weights: &[f64], rows: &[Vec<f64>], targets: &[f64], lambda: f64) -> f64 {
    let reg = 0.5 * lambda * weights.iter().map(|w| w * w).sum::<f64>();
    let hinge: f64 = rows
        .iter()
        .zip(targets)
        .map(|(row, &y)| {
            let margin: f64 = row.iter().zip(weights).map(|(x, w)| x * w).sum();
            (1.0 - y * margin).max(0.0)
        })
        .sum::<f64>()
        / rows.len() as f64;
    reg + hinge
}

fn train_binary(params: &SvmParams, rows: &[Vec<f64>], targets: &[f64]) -> Vec<f64> {
    let n = rows.len();
    let dim = rows[0].len();
    let lambda = 1.0 / (params.c * n as f64);
    let radius = 1.0 / lambda.sqrt();

    let mut weights = vec![0.0f64; dim];
    let mut best_weights = weights.clone();
    let mut best_objective = objective(&weights, rows, targets, lambda);

    for t in 1..=params.max_epochs {
        // subgradient: lambda w - mean over margin violators of y x
        let mut grad: Vec<f64> = weights.iter().map(|w| lambda * w).collect();
        for (row, &y) in rows.iter().zip(targets) {
            let margin: f64 = row.iter().zip(&weights).map(|(x, w)| x * w).sum();
            if y * margin < 1.0 {
                for (g, x) in grad.iter_mut().zip(row) {
                    *g -= y * x / n as f64;
                }
            }
        }
        let step = 1.0 / (lambda * t as f64);
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= step * g;
        }
        let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        if norm > radius {
            let shrink = radius / norm;
            for w in &mut weights {
                *w *= shrink;
            }
        }

        let current = objective(&weights, rows, targets, lambda);
        let improved = best_objective - current;
        if current < best_objective {
            best_objective = current;
            best_weights = weights.clone();
        }
        if improved.abs() < params.tolerance * best_objective.max(1e-12) && t > 10 {
            break;
        }
    }
    best_weights
}

pub fn fit(params: &SvmParams, rows: &[Vec<f64>], labels: &[usize], n_classes: usize) -> SvmFitted {
    let n_cols = rows.first().map_or(0, Vec::len);
    let standardizer = Standardizer::fit(rows, n_cols);
    let prepared: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| {
            let mut r = standardizer.apply_row(row);
            r.push(1.0);
            r
        })
        .collect();

    let weights = (0..n_classes)
        .map(|class| {
            let targets: Vec<f64> = labels
                .iter()
                .map(|&l| if l == class { 1.0 } else { -1.0 })
                .collect();
            train_binary(params, &prepared, &targets)
        })
        .collect();

    SvmFitted {
        weights,
        n_classes,
        standardizer,
    }
}

pub fn decision_values(model: &SvmFitted, row: &[f64]) -> Vec<f64> {
    let mut prepared = model.standardizer.apply_row(row);
    prepared.push(1.0);
    model
        .weights
        .iter()
        .map(|w| prepared.iter().zip(w).map(|(x, wi)| x * wi).sum())
        .collect()
}

/// Logistic squash of each one-vs-rest margin, normalized across
/// classes; the argmax always agrees with the largest raw margin.
pub fn predict_proba(model: &SvmFitted, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|row| {
            let margins = decision_values(model, row);
            let mut scores: Vec<f64> = margins
                .iter()
                .map(|&m| 1.0 / (1.0 + (-m).exp()))
                .collect();
            let total: f64 = scores.iter().sum();
            if total > 0.0 {
                for s in &mut scores {
                    *s /= total;
                }
            } else {
                let uniform = 1.0 / scores.len() as f64;
                scores.fill(uniform);
            }
            scores
        })
        .collect()
}
