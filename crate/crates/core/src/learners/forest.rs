//! Random forest: bagged Gini trees with per-split feature subsets,
//! predicting by majority vote.

use super::tree::{DecisionTree, TreeParams};
use super::RfParams;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<DecisionTree>,
    pub n_classes: usize,
}

const TREE_STREAM_BASE: u64 = 1 << 32;

/// Each tree draws from its own (seed, tree index) stream, so the
/// forest is identical no matter how trees are scheduled.
pub fn fit(
    params: &RfParams,
    seed: u64,
    rows: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
) -> Forest {
    let n = rows.len();
    let n_features = rows.first().map_or(0, Vec::len);
    let features_per_split = params
        .features_per_split
        .unwrap_or_else(|| ((n_features as f64).sqrt().floor() as usize).max(1));
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        features_per_split: Some(features_per_split.min(n_features)),
    };

    let trees: Vec<DecisionTree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(TREE_STREAM_BASE + t as u64);
            let indices: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            DecisionTree::fit(rows, labels, n_classes, indices, tree_params, &mut rng)
        })
        .collect();

    Forest { trees, n_classes }
}

/// Vote fractions over trees.
pub fn predict_proba(forest: &Forest, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n_trees = forest.trees.len() as f64;
    rows.iter()
        .map(|row| {
            let mut votes = vec![0.0; forest.n_classes];
            for tree in &forest.trees {
                votes[tree.predict_row(row)] += 1.0;
            }
            for v in &mut votes {
                *v /= n_trees;
            }
            votes
        })
        .collect()
}

pub fn used_features(forest: &Forest) -> BTreeSet<usize> {
    let mut features = BTreeSet::new();
    for tree in &forest.trees {
        tree.split_features(&mut features);
    }
    features
}
