//! Stratified k-fold assignment: per-class shuffled round-robin, so
//! every fold's class counts sit within one sample of proportional.

use crate::error::Error;
use crate::Result;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Row indices held out by each fold; disjoint, covering all rows.
    pub test_folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// (train, test) row indices for one fold, both ascending.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let test = &self.test_folds[fold];
        let train: Vec<usize> = self
            .test_folds
            .iter()
            .enumerate()
            .filter(|(f, _)| *f != fold)
            .flat_map(|(_, rows)| rows.iter().copied())
            .collect();
        let mut train = train;
        train.sort_unstable();
        (train, test.clone())
    }
}

/// Assign rows to k folds preserving class proportions. Classes present
/// in `y` must have at least k members.
pub fn stratified_kfold(y: &[usize], n_classes: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidConfig("k must be at least 2".to_string()));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &label) in y.iter().enumerate() {
        by_class[label].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if !members.is_empty() && members.len() < k {
            return Err(Error::ClassTooSmallForFolds(
                class.to_string(),
                members.len(),
                k,
            ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test_folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for members in by_class.iter_mut() {
        members.shuffle(&mut rng);
        // a random starting fold keeps remainders from piling onto fold 0
        let offset = rng.gen_range(0..k);
        for (j, &row) in members.iter().enumerate() {
            test_folds[(offset + j) % k].push(row);
        }
    }
    for fold in &mut test_folds {
        fold.sort_unstable();
    }
    Ok(FoldPlan {
        k,
        seed,
        test_folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn class_counts(fold: &[usize], y: &[usize], n_classes: usize) -> Vec<usize> {
        let mut counts = vec![0; n_classes];
        for &row in fold {
            counts[y[row]] += 1;
        }
        counts
    }

    #[test]
    fn perfectly_divisible_classes_split_evenly() {
        let y = vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        let plan = stratified_kfold(&y, 2, 5, 1).unwrap();
        for fold in &plan.test_folds {
            assert_eq!(class_counts(fold, &y, 2), vec![1, 1]);
        }
    }

    #[test]
    fn remainder_lands_on_exactly_one_fold() {
        let mut y = vec![1; 6];
        y.extend(vec![0; 5]);
        let plan = stratified_kfold(&y, 2, 5, 3).unwrap();
        let mut two_pos_folds = 0;
        for fold in &plan.test_folds {
            let counts = class_counts(fold, &y, 2);
            assert_eq!(counts[0], 1);
            assert!(counts[1] == 1 || counts[1] == 2);
            if counts[1] == 2 {
                two_pos_folds += 1;
            }
        }
        assert_eq!(two_pos_folds, 1);
    }

    #[test]
    fn folds_partition_all_rows() {
        let y: Vec<usize> = (0..53).map(|i| i % 3).collect();
        let plan = stratified_kfold(&y, 3, 5, 9).unwrap();
        let mut seen = HashSet::new();
        for fold in &plan.test_folds {
            for &row in fold {
                assert!(seen.insert(row), "row {row} in two folds");
            }
        }
        assert_eq!(seen.len(), 53);

        // per-class counts deviate from proportional by at most 1
        for class in 0..3 {
            let total = y.iter().filter(|&&v| v == class).count() as f64;
            for fold in &plan.test_folds {
                let count = class_counts(fold, &y, 3)[class] as f64;
                assert!((count - total / 5.0).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn same_seed_same_folds() {
        let y: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let a = stratified_kfold(&y, 2, 5, 7).unwrap();
        let b = stratified_kfold(&y, 2, 5, 7).unwrap();
        assert_eq!(a, b);
        let c = stratified_kfold(&y, 2, 5, 8).unwrap();
        assert_ne!(a.test_folds, c.test_folds);
    }

    #[test]
    fn small_class_is_rejected() {
        let y = vec![0, 0, 0, 0, 0, 1, 1];
        assert!(matches!(
            stratified_kfold(&y, 2, 5, 0),
            Err(Error::ClassTooSmallForFolds(_, 2, 5))
        ));
    }

    #[test]
    fn absent_class_is_tolerated() {
        // three-class label space where class 1 never occurs
        let y = vec![0, 0, 0, 2, 2, 2];
        let plan = stratified_kfold(&y, 3, 3, 0).unwrap();
        assert_eq!(plan.test_folds.len(), 3);
    }

    #[test]
    fn split_returns_complementary_sets() {
        let y: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let plan = stratified_kfold(&y, 2, 4, 5).unwrap();
        let (train, test) = plan.split(2);
        assert_eq!(train.len() + test.len(), 20);
        let train_set: HashSet<usize> = train.into_iter().collect();
        assert!(test.iter().all(|row| !train_set.contains(row)));
    }
}
