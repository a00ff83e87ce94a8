//! Depth-limited classification tree with Gini splits; the building
//! block of the random forest and usable on its own.
//!
//! Split search works on per-feature presorted index lists that are
//! partitioned stably at each node, so one O(p n log n) sort per tree
//! covers the whole build.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        /// Values <= threshold go left.
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub n_classes: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Candidate features considered per split; `None` tries all.
    pub features_per_split: Option<usize>,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate().skip(1) {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Sort a copy of `indices` by each feature; the per-node builder keeps
/// these lists partitioned instead of re-sorting.
pub(crate) fn presort(rows: &[Vec<f64>], indices: &[usize], n_features: usize) -> Vec<Vec<usize>> {
    (0..n_features)
        .map(|feature| {
            let mut order = indices.to_vec();
            order.sort_unstable_by(|&a, &b| {
                rows[a][feature].partial_cmp(&rows[b][feature]).unwrap()
            });
            order
        })
        .collect()
}

struct Builder<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [usize],
    n_classes: usize,
    params: TreeParams,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn class_counts(&self, indices: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &i in indices {
            counts[self.labels[i]] += 1;
        }
        counts
    }

    /// Best (gain, threshold) for one feature, scanning its presorted
    /// node list, or None when no split satisfies min_leaf.
    fn best_split_on_feature(
        &self,
        sorted: &[usize],
        feature: usize,
        parent_gini: f64,
        counts: &[usize],
    ) -> Option<(f64, f64)> {
        let n = sorted.len();
        let mut left_counts = vec![0usize; self.n_classes];
        let mut best: Option<(f64, f64)> = None;
        for split_at in 1..n {
            let prev = sorted[split_at - 1];
            left_counts[self.labels[prev]] += 1;
            let lo = self.rows[prev][feature];
            let hi = self.rows[sorted[split_at]][feature];
            if lo == hi {
                continue;
            }
            if split_at < self.params.min_leaf || n - split_at < self.params.min_leaf {
                continue;
            }
            let right_counts: Vec<usize> = counts
                .iter()
                .zip(&left_counts)
                .map(|(&t, &l)| t - l)
                .collect();
            let weighted = (split_at as f64 / n as f64) * gini(&left_counts, split_at)
                + ((n - split_at) as f64 / n as f64) * gini(&right_counts, n - split_at);
            // zero-gain splits stay admissible; depth or node size
            // bounds the recursion (greedy Gini alone cannot enter an
            // XOR-style split otherwise)
            let gain = parent_gini - weighted;
            if best.map_or(true, |(g, _)| gain > g) {
                best = Some((gain, (lo + hi) / 2.0));
            }
        }
        best
    }

    fn build(&mut self, lists: Vec<Vec<usize>>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let node_indices = &lists[0];
        let counts = self.class_counts(node_indices);
        let parent_gini = gini(&counts, node_indices.len());
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if parent_gini == 0.0 || depth_reached || node_indices.len() < 2 * self.params.min_leaf {
            self.nodes.push(Node::Leaf {
                class: majority(&counts),
            });
            return self.nodes.len() - 1;
        }

        let n_features = lists.len();
        let candidates: Vec<usize> = match self.params.features_per_split {
            Some(m) if m < n_features => rand::seq::index::sample(rng, n_features, m).into_vec(),
            _ => (0..n_features).collect(),
        };

        let mut best: Option<(f64, usize, f64)> = None;
        for feature in candidates {
            if let Some((gain, threshold)) =
                self.best_split_on_feature(&lists[feature], feature, parent_gini, &counts)
            {
                if best.map_or(true, |(g, _, _)| gain > g) {
                    best = Some((gain, feature, threshold));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            self.nodes.push(Node::Leaf {
                class: majority(&counts),
            });
            return self.nodes.len() - 1;
        };

        // stable partition of every per-feature list keeps them sorted
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
        self.nodes.push(Node::Leaf { class: 0 }); // placeholder
        let left_id = self.build(left_lists, depth + 1, rng);
        let right_id = self.build(right_lists, depth + 1, rng);
        self.nodes[slot] = Node::Split {
            feature,
            threshold,
            left: left_id,
            right: right_id,
        };
        slot
    }
}

impl DecisionTree {
    /// Fit on the rows selected by `indices` (repeats allowed, as
    /// produced by bootstrap sampling).
    pub fn fit(
        rows: &[Vec<f64>],
        labels: &[usize],
        n_classes: usize,
        indices: Vec<usize>,
        params: TreeParams,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let n_features = rows.first().map_or(0, Vec::len);
        let mut builder = Builder {
            rows,
            labels,
            n_classes,
            params,
            nodes: Vec::new(),
        };
        if indices.is_empty() || n_features == 0 {
            builder.nodes.push(Node::Leaf { class: 0 });
        } else {
            let lists = presort(rows, &indices, n_features);
            builder.build(lists, 0, rng);
        }
        DecisionTree {
            nodes: builder.nodes,
            n_classes,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class } => return *class,
                Node::Split {
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

    pub fn split_features(&self, into: &mut BTreeSet<usize>) {
        for node in &self.nodes {
            if let Node::Split { feature, .. } = node {
                into.insert(*feature);
            }
        }
    }
}
