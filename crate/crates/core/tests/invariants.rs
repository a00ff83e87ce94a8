//! Property tests for the structural invariants that hold across the
//! pipeline's data transformations.

use proptest::prelude::*;
use trihealth::domain::{Cell, ColumnSpec, DailyRecord, FeatureMatrix, ParticipantId};
use trihealth::eval::stratified_kfold;
use trihealth::features::{change_feature, one_hot_encode, split_halves};
use trihealth::impute::{knn_distance, mean_impute};

proptest! {
    #[test]
    fn split_halves_is_balanced_and_ordered(mut days in prop::collection::vec(0u32..90, 0..40)) {
        days.sort_unstable();
        days.dedup();
        let records: Vec<DailyRecord> = days
            .iter()
            .map(|&d| {
                let mut r = DailyRecord::empty(ParticipantId("p".into()), d);
                r.steps = Some(1);
                r
            })
            .collect();
        let refs: Vec<&DailyRecord> = records.iter().collect();
        let split = split_halves(&refs);

        prop_assert!(split.former.len() >= split.latter.len());
        prop_assert!(split.former.len() - split.latter.len() <= 1);
        if let (Some(last_former), Some(first_latter)) =
            (split.former.last(), split.latter.first())
        {
            prop_assert!(last_former.day_index < first_latter.day_index);
        }
    }

    #[test]
    fn change_feature_is_absolute_and_symmetric(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        let c = change_feature(Some(a), Some(b)).unwrap();
        prop_assert!(c >= 0.0);
        prop_assert_eq!(c, change_feature(Some(b), Some(a)).unwrap());
        prop_assert_eq!(change_feature(Some(a), None), None);
        prop_assert_eq!(change_feature(None, Some(b)), None);
    }

    #[test]
    fn knn_distance_is_a_semimetric(
        a in -50f64..50.0,
        b in -50f64..50.0,
        cat_a in 0usize..3,
        cat_b in 0usize..3,
        std in 0.1f64..10.0,
    ) {
        let anchors = [(0usize, true, std), (1, false, 0.0)];
        let row_a = vec![Cell::Number(a), Cell::Category(cat_a)];
        let row_b = vec![Cell::Number(b), Cell::Category(cat_b)];
        let d_ab = knn_distance(&row_a, &row_b, &anchors);
        let d_ba = knn_distance(&row_b, &row_a, &anchors);
        prop_assert!(d_ab >= 0.0);
        prop_assert_eq!(d_ab, d_ba);
        let same = a == b && cat_a == cat_b;
        prop_assert_eq!(d_ab == 0.0, same);
    }

    #[test]
    fn one_hot_indicators_sum_to_one(categories in prop::collection::vec(0usize..4, 1..30)) {
        let schema = vec![ColumnSpec::categorical("c", &["w", "x", "y", "z"])];
        let ids = (0..categories.len())
            .map(|i| ParticipantId(format!("p{i}")))
            .collect();
        let values: Vec<Vec<Cell>> = categories.iter().map(|&c| vec![Cell::Category(c)]).collect();
        let matrix = FeatureMatrix::new(schema, ids, values).unwrap();
        let encoded = one_hot_encode(&matrix).unwrap();
        for row in &encoded.rows {
            prop_assert_eq!(row.iter().sum::<f64>(), 1.0);
            prop_assert!(row.iter().all(|&v| v == 0.0 || v == 1.0));
        }
    }

    #[test]
    fn stratified_folds_partition_with_balanced_classes(
        labels in prop::collection::vec(0usize..3, 20..120),
        k in 2usize..6,
    ) {
        // skip draws where a present class has fewer members than k
        let mut counts = [0usize; 3];
        for &l in &labels {
            counts[l] += 1;
        }
        prop_assume!(counts.iter().all(|&c| c == 0 || c >= k));

        let plan = stratified_kfold(&labels, 3, k, 99).unwrap();
        let mut seen = vec![false; labels.len()];
        for fold in &plan.test_folds {
            for &row in fold {
                prop_assert!(!seen[row]);
                seen[row] = true;
            }
        }
        prop_assert!(seen.iter().all(|&s| s));

        for class in 0..3 {
            let total = counts[class] as f64;
            for fold in &plan.test_folds {
                let in_fold = fold.iter().filter(|&&r| labels[r] == class).count() as f64;
                prop_assert!((in_fold - total / k as f64).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn mean_imputation_preserves_column_means(
        observed in prop::collection::vec(-1e3f64..1e3, 2..40),
        missing_count in 1usize..10,
    ) {
        let mut values: Vec<Vec<Cell>> = observed.iter().map(|&v| vec![Cell::Number(v)]).collect();
        for _ in 0..missing_count {
            values.push(vec![Cell::Missing]);
        }
        let ids = (0..values.len()).map(|i| ParticipantId(format!("p{i}"))).collect();
        let matrix = FeatureMatrix::new(
            vec![ColumnSpec::numeric("v", None)],
            ids,
            values,
        ).unwrap();

        let before = observed.iter().sum::<f64>() / observed.len() as f64;
        let imputed = mean_impute(&matrix).unwrap();
        let after = imputed
            .values
            .iter()
            .map(|r| r[0].as_number().unwrap())
            .sum::<f64>()
            / imputed.n_rows() as f64;
        prop_assert!((after - before).abs() <= 1e-9 * before.abs().max(1.0));
    }
}
