//! Shapley attribution of model scores to features.
//!
//! The coalition value v(S) is interventional: features in S take the
//! instance's values, the rest are marginalized over an explicit
//! background set, and v is the mean per-class score over that set. The
//! exact enumerator sums over all coalitions (feasible up to 15
//! features); the permutation estimator averages marginal contributions
//! over random feature orderings and serves the full 41-column matrix.

pub mod summary;

pub use summary::{render_summary_svg, summarize, ShapleyReport};

use crate::error::Error;
use crate::features::EncodedMatrix;
use crate::learners::TrainedModel;
use crate::Result;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Exact enumeration is capped at this many features by default.
pub const DEFAULT_MAX_EXACT_FEATURES: usize = 15;

/// Per-instance attributions: `attributions[feature][class]`, plus the
/// per-class expected score over the background set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyValues {
    pub base_values: Vec<f64>,
    pub attributions: Vec<Vec<f64>>,
}

impl ShapleyValues {
    pub fn n_features(&self) -> usize {
        self.attributions.len()
    }

    pub fn n_classes(&self) -> usize {
        self.base_values.len()
    }
}

/// Settings for cohort-level explanation runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplainConfig {
    /// Background rows subsampled from the training matrix.
    pub background_size: usize,
    pub n_permutations: usize,
    /// 0 explains every row; otherwise a seeded subsample of rows.
    pub instance_limit: usize,
    pub seed: u64,
    /// Features listed per class in the report and chart.
    pub top_n: usize,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            background_size: 40,
            n_permutations: 16,
            instance_limit: 0,
            seed: 42,
            top_n: 10,
        }
    }
}

fn check_inputs(
    model: &TrainedModel,
    instance: &[f64],
    background: &EncodedMatrix,
) -> Result<()> {
    if background.n_rows() == 0 {
        return Err(Error::EmptyBackground);
    }
    let actual = background.schema_fingerprint();
    if actual != model.schema_fingerprint {
        return Err(Error::SchemaMismatch {
            expected: model.schema_fingerprint.clone(),
            actual,
        });
    }
    if instance.len() != background.n_cols() {
        return Err(Error::LengthMismatch {
            left: instance.len(),
            right: background.n_cols(),
            context: "instance width vs schema",
        });
    }
    Ok(())
}

/// Mean per-class score over hybrid rows: coalition features from the
/// instance, the rest from each background row in turn.
fn coalition_value(
    model: &TrainedModel,
    instance: &[f64],
    background: &[Vec<f64>],
    in_coalition: &[bool],
) -> Vec<f64> {
    let rows: Vec<Vec<f64>> = background
        .iter()
        .map(|bg| {
            instance
                .iter()
                .zip(bg)
                .zip(in_coalition)
                .map(|((&x, &b), &take)| if take { x } else { b })
                .collect()
        })
        .collect();
    mean_scores(&model.predict_proba_rows(&rows), model.n_classes())
}

fn mean_scores(scores: &[Vec<f64>], n_classes: usize) -> Vec<f64> {
    let mut mean = vec![0.0; n_classes];
    for row in scores {
        for (m, s) in mean.iter_mut().zip(row) {
            *m += s;
        }
    }
    let n = scores.len().max(1) as f64;
    for m in &mut mean {
        *m /= n;
    }
    mean
}

/// Exact Shapley values by coalition enumeration.
///
/// For each feature j, sums |S|!(M-|S|-1)!/M! * (v(S u {j}) - v(S))
/// over all subsets S of the other features. Errors above
/// `max_features` because the 2^M coalition table stops being viable.
pub fn shapley_exact(
    model: &TrainedModel,
    instance: &[f64],
    background: &EncodedMatrix,
    max_features: usize,
) -> Result<ShapleyValues> {
    check_inputs(model, instance, background)?;
    let m = instance.len();
    if m > max_features {
        return Err(Error::TooManyFeatures {
            n_features: m,
            max: max_features,
        });
    }
    let n_classes = model.n_classes();

    // v for every coalition bitmask
    let values: Vec<Vec<f64>> = (0u32..(1 << m))
        .into_par_iter()
        .map(|mask| {
            let in_coalition: Vec<bool> = (0..m).map(|j| mask >> j & 1 == 1).collect();
            coalition_value(model, instance, &background.rows, &in_coalition)
        })
        .collect();

    let mut factorial = vec![1.0f64; m + 1];
    for i in 1..=m {
        factorial[i] = factorial[i - 1] * i as f64;
    }
    let weight = |subset_size: usize| {
        factorial[subset_size] * factorial[m - subset_size - 1] / factorial[m]
    };

    let mut attributions = vec![vec![0.0; n_classes]; m];
    for mask in 0u32..(1 << m) {
        let size = mask.count_ones() as usize;
        for j in 0..m {
            if mask >> j & 1 == 0 {
                let with_j = mask | (1 << j);
                let w = weight(size);
                for class in 0..n_classes {
                    attributions[j][class] +=
                        w * (values[with_j as usize][class] - values[mask as usize][class]);
                }
            }
        }
    }

    Ok(ShapleyValues {
        base_values: values[0].clone(),
        attributions,
    })
}

/// Monte-Carlo Shapley estimate: marginal contributions averaged over
/// `n_permutations` random feature orderings, then rescaled additively
/// so the efficiency identity holds exactly. Deterministic for a fixed
/// seed; permutation p draws from stream (seed, p).
pub fn shapley_sampling(
    model: &TrainedModel,
    instance: &[f64],
    background: &EncodedMatrix,
    n_permutations: usize,
    seed: u64,
) -> Result<ShapleyValues> {
    check_inputs(model, instance, background)?;
    if n_permutations == 0 {
        return Err(Error::InvalidConfig(
            "n_permutations must be at least 1".to_string(),
        ));
    }
    let m = instance.len();
    let n_classes = model.n_classes();

    let empty_value = mean_scores(&model.predict_proba_rows(&background.rows), n_classes);
    let full_value = mean_scores(
        &model.predict_proba_rows(std::slice::from_ref(&instance.to_vec())),
        n_classes,
    );

    let per_permutation: Vec<Vec<Vec<f64>>> = (0..n_permutations)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(&mut rng);

            // grow the coalition along the ordering, reusing the hybrid rows
            let mut rows: Vec<Vec<f64>> = background.rows.clone();
            let mut prev = empty_value.clone();
            let mut contributions = vec![vec![0.0; n_classes]; m];
            for &feature in &order {
                for row in &mut rows {
                    row[feature] = instance[feature];
                }
                let current = mean_scores(&model.predict_proba_rows(&rows), n_classes);
                for class in 0..n_classes {
                    contributions[feature][class] = current[class] - prev[class];
                }
                prev = current;
            }
            contributions
        })
        .collect();

    let mut attributions = vec![vec![0.0; n_classes]; m];
    for contributions in &per_permutation {
        for (acc, c) in attributions.iter_mut().zip(contributions) {
            for (a, v) in acc.iter_mut().zip(c) {
                *a += v;
            }
        }
    }
    for feature in &mut attributions {
        for v in feature.iter_mut() {
            *v /= n_permutations as f64;
        }
    }

    // spread any Monte-Carlo residue evenly so efficiency holds exactly
    for class in 0..n_classes {
        let total: f64 = attributions.iter().map(|f| f[class]).sum();
        let residue = (full_value[class] - empty_value[class]) - total;
        let correction = residue / m as f64;
        for feature in &mut attributions {
            feature[class] += correction;
        }
    }

    Ok(ShapleyValues {
        base_values: empty_value,
        attributions,
    })
}

/// Seeded subsample of rows to serve as the background set; sizes
/// larger than the matrix are clamped.
pub fn subsample_background(matrix: &EncodedMatrix, size: usize, seed: u64) -> EncodedMatrix {
    let n = matrix.n_rows();
    if size >= n {
        return matrix.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut chosen: Vec<usize> = order.into_iter().take(size).collect();
    chosen.sort_unstable();
    matrix.select_rows(&chosen)
}

/// Sampling-based attributions for a set of instances; instance i uses
/// RNG streams derived from (seed, i) so the run parallelizes without
/// affecting results.
pub fn explain_instances(
    model: &TrainedModel,
    instances: &EncodedMatrix,
    background: &EncodedMatrix,
    n_permutations: usize,
    seed: u64,
) -> Result<Vec<ShapleyValues>> {
    instances
        .rows
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            shapley_sampling(
                model,
                row,
                background,
                n_permutations,
                seed.wrapping_add((i as u64).wrapping_mul(0x9E3779B97F4A7C15)),
            )
        })
        .collect()
}
