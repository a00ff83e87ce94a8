//! Gradient-boosted trees: additive regression trees fit to the first
//! and second derivatives of softmax cross-entropy, with L2 leaf
//! regularization and a minimum split gain. One tree per class per
//! round; leaf weights take a damped Newton step.

use super::GbtParams;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegNode {
    Leaf {
        weight: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegTree {
    pub nodes: Vec<RegNode>,
}

impl RegTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                RegNode::Leaf { weight } => return *weight,
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    fn split_features(&self, into: &mut BTreeSet<usize>) {
        for node in &self.nodes {
            if let RegNode::Split { feature, .. } = node {
                into.insert(*feature);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boost {
    /// rounds x classes.
    pub trees: Vec<Vec<RegTree>>,
    pub n_classes: usize,
    pub learning_rate: f64,
    /// Softmax cross-entropy on the training data before each round,
    /// plus the final value; length n_rounds + 1.
    pub train_loss: Vec<f64>,
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Cross-entropy of one row's logits against its label.
pub fn softmax_ce_loss(logits: &[f64], label: usize) -> f64 {
    let probs = softmax(logits);
    -probs[label].max(1e-300).ln()
}

/// First and diagonal second derivatives of the loss with respect to
/// each logit: g_k = p_k - 1{k = label}, h_k = p_k (1 - p_k).
pub fn softmax_ce_gradients(logits: &[f64], label: usize) -> (Vec<f64>, Vec<f64>) {
    let probs = softmax(logits);
    let grad: Vec<f64> = probs
        .iter()
        .enumerate()
        .map(|(k, &p)| p - if k == label { 1.0 } else { 0.0 })
        .collect();
    let hess: Vec<f64> = probs.iter().map(|&p| p * (1.0 - p)).collect();
    (grad, hess)
}

struct RegBuilder<'a> {
    rows: &'a [Vec<f64>],
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GbtParams,
    nodes: Vec<RegNode>,
}

impl RegBuilder<'_> {
    fn leaf_weight(&self, g_sum: f64, h_sum: f64) -> f64 {
        -g_sum / (h_sum + self.params.l2_leaf_penalty)
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.l2_leaf_penalty)
    }

    /// `lists` holds this node's row indices presorted by each feature.
    fn build(&mut self, lists: Vec<Vec<usize>>, depth: usize) -> usize {
        let node_indices = &lists[0];
        let g_total: f64 = node_indices.iter().map(|&i| self.grad[i]).sum();
        let h_total: f64 = node_indices.iter().map(|&i| self.hess[i]).sum();

        if depth >= self.params.max_depth || node_indices.len() < 2 {
            self.nodes.push(RegNode::Leaf {
                weight: self.leaf_weight(g_total, h_total),
            });
            return self.nodes.len() - 1;
        }

        let parent_score = self.score(g_total, h_total);
        let mut best: Option<(f64, usize, f64)> = None;

        for (feature, sorted) in lists.iter().enumerate() {
            let mut g_left = 0.0;
            let mut h_left = 0.0;
            for split_at in 1..sorted.len() {
                let prev = sorted[split_at - 1];
                g_left += self.grad[prev];
                h_left += self.hess[prev];
                let lo = self.rows[prev][feature];
                let hi = self.rows[sorted[split_at]][feature];
                if lo == hi {
                    continue;
                }
                let gain = 0.5
                    * (self.score(g_left, h_left)
                        + self.score(g_total - g_left, h_total - h_left)
                        - parent_score);
                if gain > self.params.min_split_gain && best.map_or(true, |(g, _, _)| gain > g) {
                    best = Some((gain, feature, (lo + hi) / 2.0));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            self.nodes.push(RegNode::Leaf {
                weight: self.leaf_weight(g_total, h_total),
            });
            return self.nodes.len() - 1;
        };

        let mut left_lists = Vec::with_capacity(lists.len());
        let mut right_lists = Vec::with_capacity(lists.len());
        for list in lists {
            let (l, r): (Vec<usize>, Vec<usize>) = list
                .into_iter()
                .partition(|&i| self.rows[i][feature] <= threshold);
            left_lists.push(l);
            right_lists.push(r);
        }

        let slot = self.nodes.len();
        self.nodes.push(RegNode::Leaf { weight: 0.0 });
        let left_id = self.build(left_lists, depth + 1);
        let right_id = self.build(right_lists, depth + 1);
        self.nodes[slot] = RegNode::Split {
            feature,
            threshold,
            left: left_id,
            right: right_id,
        };
        slot
    }
}

pub fn fit(params: &GbtParams, rows: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Boost {
    let n = rows.len();
    let n_features = rows.first().map_or(0, Vec::len);
    // the row set never changes across rounds, so sort features once
    let all_indices: Vec<usize> = (0..n).collect();
    let sorted_lists = super::tree::presort(rows, &all_indices, n_features);

    let mut scores = vec![vec![0.0f64; n_classes]; n];
    let mut trees: Vec<Vec<RegTree>> = Vec::with_capacity(params.n_rounds);
    let mut train_loss = Vec::with_capacity(params.n_rounds + 1);

    for _ in 0..params.n_rounds {
        let mut loss = 0.0;
        let mut grad = vec![vec![0.0f64; n]; n_classes];
        let mut hess = vec![vec![0.0f64; n]; n_classes];
        for (i, score) in scores.iter().enumerate() {
            loss += softmax_ce_loss(score, labels[i]);
            let (g, h) = softmax_ce_gradients(score, labels[i]);
            for k in 0..n_classes {
                grad[k][i] = g[k];
                hess[k][i] = h[k].max(1e-16);
            }
        }
        train_loss.push(loss / n as f64);

        let mut round = Vec::with_capacity(n_classes);
        for k in 0..n_classes {
            let mut builder = RegBuilder {
                rows,
                grad: &grad[k],
                hess: &hess[k],
                params,
                nodes: Vec::new(),
            };
            if sorted_lists.is_empty() {
                builder.nodes.push(RegNode::Leaf { weight: 0.0 });
            } else {
                builder.build(sorted_lists.clone(), 0);
            }
            let tree = RegTree {
                nodes: builder.nodes,
            };
            for (i, row) in rows.iter().enumerate() {
                scores[i][k] += params.learning_rate * tree.predict_row(row);
            }
            round.push(tree);
        }
        trees.push(round);
    }

    let final_loss: f64 = scores
        .iter()
        .enumerate()
        .map(|(i, s)| softmax_ce_loss(s, labels[i]))
        .sum::<f64>()
        / n.max(1) as f64;
    train_loss.push(final_loss);

    Boost {
        trees,
        n_classes,
        learning_rate: params.learning_rate,
        train_loss,
    }
}

pub fn raw_scores(boost: &Boost, row: &[f64]) -> Vec<f64> {
    let mut scores = vec![0.0; boost.n_classes];
    for round in &boost.trees {
        for (k, tree) in round.iter().enumerate() {
            scores[k] += boost.learning_rate * tree.predict_row(row);
        }
    }
    scores
}

pub fn predict_proba(boost: &Boost, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter().map(|row| softmax(&raw_scores(boost, row))).collect()
}

pub fn used_features(boost: &Boost) -> BTreeSet<usize> {
    let mut features = BTreeSet::new();
    for round in &boost.trees {
        for tree in round {
            tree.split_features(&mut features);
        }
    }
    features
}

#[cfg(test)]
mod tests {
    use super::super::test_data::blobs;
    use super::*;

    #[test]
    fn gradients_match_finite_differences() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let eps = 1e-5;
        for _ in 0..200 {
            let n_classes = rng.gen_range(2..=4);
            let logits: Vec<f64> = (0..n_classes).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let label = rng.gen_range(0..n_classes);
            let (grad, hess) = softmax_ce_gradients(&logits, label);
            for k in 0..n_classes {
                let mut up = logits.clone();
                up[k] += eps;
                let mut down = logits.clone();
                down[k] -= eps;
                let fd_grad =
                    (softmax_ce_loss(&up, label) - softmax_ce_loss(&down, label)) / (2.0 * eps);
                let (gu, _) = softmax_ce_gradients(&up, label);
                let (gd, _) = softmax_ce_gradients(&down, label);
                let fd_hess = (gu[k] - gd[k]) / (2.0 * eps);
                let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-3);
                assert!(rel(grad[k], fd_grad) < 1e-5, "grad {} vs {}", grad[k], fd_grad);
                assert!(rel(hess[k], fd_hess) < 1e-5, "hess {} vs {}", hess[k], fd_hess);
            }
        }
    }

    #[test]
    fn training_loss_is_non_increasing() {
        let (x, y) = blobs(60, 0.5, 17);
        for lr in [0.3, 1.0] {
            let boost = fit(
                &GbtParams {
                    n_rounds: 40,
                    learning_rate: lr,
                    max_depth: 3,
                    l2_leaf_penalty: 1.0,
                    min_split_gain: 0.0,
                },
                &x.rows,
                &y,
                2,
            );
            for pair in boost.train_loss.windows(2) {
                assert!(
                    pair[1] <= pair[0] + 1e-12,
                    "loss rose from {} to {} at lr {lr}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }

    #[test]
    fn boosting_drives_training_error_down_on_separable_data() {
        let (x, y) = blobs(100, 2.0, 23);
        let boost = fit(&GbtParams::default(), &x.rows, &y, 2);
        let probs = predict_proba(&boost, &x.rows);
        let accuracy = probs
            .iter()
            .zip(&y)
            .filter(|(p, &label)| super::super::argmax(p) == label)
            .count() as f64
            / y.len() as f64;
        assert!(accuracy >= 0.95, "accuracy {accuracy}");
    }

    #[test]
    fn three_class_probabilities_normalize() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let labels: Vec<usize> = (0..30).map(|i| i / 10).collect();
        let boost = fit(&GbtParams::default(), &rows, &labels, 3);
        for probs in predict_proba(&boost, &rows) {
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn min_split_gain_prunes_weak_splits() {
        let (x, y) = blobs(40, 0.1, 31);
        let strict = fit(
            &GbtParams {
                n_rounds: 5,
                min_split_gain: 1e6,
                ..GbtParams::default()
            },
            &x.rows,
            &y,
            2,
        );
        // with an impossible gain bar every tree is a single leaf
        for round in &strict.trees {
            for tree in round {
                assert_eq!(tree.nodes.len(), 1);
            }
        }
    }
}
