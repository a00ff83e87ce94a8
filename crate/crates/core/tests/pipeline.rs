//! End-to-end pipeline smoke test at small scale: generate, injure,
//! clean, featurize, impute, train, predict, and explain in memory.

use trihealth::cleaning::clean;
use trihealth::domain::{validate_cohort, Disease, LabelVector};
use trihealth::explain::{explain_instances, subsample_background, summarize};
use trihealth::features::{build_feature_matrix, one_hot_encode};
use trihealth::impute::{impute, ImputeConfig};
use trihealth::learners::{fit, ClassifierSpec, GbtParams, Labels, ModelParams};
use trihealth::synthgen::{generate_cohort, inject_violations, GeneratorConfig, ViolationSpec};

#[test]
fn pipeline_runs_end_to_end_in_memory() {
    let config = GeneratorConfig {
        n_participants: 80,
        seed: 21,
        ..GeneratorConfig::default()
    };
    let generated = generate_cohort(&config).unwrap();
    let spec = ViolationSpec {
        n_short_uploaders: 4,
        n_missing_profile: 2,
        n_constant_sleep: 2,
    };
    let (dirty, _) = inject_violations(&generated.cohort, &spec, &config, 5).unwrap();
    assert!(validate_cohort(&dirty).is_empty());

    let (cleaned, report) = clean(&dirty);
    assert_eq!(report.counts(), (4, 2, 2));
    assert_eq!(cleaned.n_participants(), 80);

    let matrix = build_feature_matrix(&cleaned).unwrap();
    assert_eq!(matrix.n_rows(), 80);
    assert!(matrix.has_missing());

    let imputed = impute(&matrix, &ImputeConfig::knn(25)).unwrap();
    assert!(!imputed.has_missing());
    let encoded = one_hot_encode(&imputed).unwrap();
    assert!(encoded.missing.is_empty());

    let labels = LabelVector::from_profiles(Disease::Hypertension, &cleaned.profiles);
    let spec = ClassifierSpec::new(
        ModelParams::Gbt(GbtParams {
            n_rounds: 40,
            max_depth: 3,
            ..GbtParams::default()
        }),
        2,
    );
    let model = fit(&spec, &encoded, &Labels::from(&labels)).unwrap();
    let preds = model.predict(&encoded).unwrap();
    let train_accuracy = preds
        .iter()
        .zip(&labels.values)
        .filter(|(a, b)| a == b)
        .count() as f64
        / preds.len() as f64;
    assert!(train_accuracy > 0.8, "training accuracy {train_accuracy}");

    let background = subsample_background(&encoded, 12, 1);
    let instances = subsample_background(&encoded, 10, 2);
    let values = explain_instances(&model, &instances, &background, 8, 3).unwrap();
    let names: Vec<String> = encoded.columns.iter().map(|c| c.name.clone()).collect();
    let report = summarize(&values, &names, &model.classes).unwrap();
    assert_eq!(report.ranking[0].len(), encoded.n_cols());
}
