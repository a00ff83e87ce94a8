//! Nested stratified cross-validation and the model comparison report.
//!
//! The outer folds measure generalization; hyperparameters are chosen
//! per outer fold by grid search on inner folds of the training split
//! only, then the winner is refit on the whole training split and
//! scored on the held-out fold. Imputation statistics are always fit on
//! the training rows of the split at hand and applied to its test rows,
//! so held-out data never leaks into imputation, scaling, or
//! hyperparameter choice.

pub mod expert;
pub mod folds;
pub mod metrics;

pub use expert::{expert_rule_imputed, expert_rule_raw};
pub use folds::{stratified_kfold, FoldPlan};
pub use metrics::{compute_metrics, MetricSet};

use crate::domain::{Cohort, Disease, FeatureMatrix, LabelVector};
use crate::features::one_hot_encode;
use crate::impute::{ImputeConfig, ImputeMethod, KnnImputer, MeanImputer};
use crate::learners::{
    self, ClassifierKind, ClassifierSpec, GbtParams, KnnParams, Labels, ModelParams, RfParams,
    SvmParams,
};
use crate::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Hyperparameter candidates per model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grids {
    pub rf: Vec<RfParams>,
    pub gbt: Vec<GbtParams>,
    pub knn: Vec<KnnParams>,
    pub svm: Vec<SvmParams>,
}

impl Default for Grids {
    fn default() -> Self {
        let mut rf = Vec::new();
        for n_trees in [100, 300] {
            for max_depth in [Some(4), Some(8), None] {
                rf.push(RfParams {
                    n_trees,
                    max_depth,
                    ..RfParams::default()
                });
            }
        }
        let mut gbt = Vec::new();
        for n_rounds in [100, 300] {
            for learning_rate in [0.1, 0.3] {
                for max_depth in [3, 6] {
                    gbt.push(GbtParams {
                        n_rounds,
                        learning_rate,
                        max_depth,
                        ..GbtParams::default()
                    });
                }
            }
        }
        let knn = [5, 11, 21]
            .iter()
            .map(|&k| KnnParams {
                k,
                standardize: true,
            })
            .collect();
        let svm = [0.1, 1.0, 10.0]
            .iter()
            .map(|&c| SvmParams {
                c,
                ..SvmParams::default()
            })
            .collect();
        Grids { rf, gbt, knn, svm }
    }
}

impl Grids {
    pub fn for_kind(&self, kind: ClassifierKind) -> Vec<ModelParams> {
        match kind {
            ClassifierKind::Rf => self.rf.iter().cloned().map(ModelParams::Rf).collect(),
            ClassifierKind::Gbt => self.gbt.iter().cloned().map(ModelParams::Gbt).collect(),
            ClassifierKind::Knn => self.knn.iter().cloned().map(ModelParams::Knn).collect(),
            ClassifierKind::Svm => self.svm.iter().cloned().map(ModelParams::Svm).collect(),
        }
    }
}

/// One outer fold's outcome: the hyperparameters the inner folds chose
/// and the held-out metrics they earned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub chosen: ModelParams,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub mean: MetricSet,
    pub folds: Vec<FoldOutcome>,
}

fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    base.wrapping_mul(0x9E3779B97F4A7C15)
        .wrapping_add(a.wrapping_mul(0xD1B54A32D192ED03))
        .wrapping_add(b.wrapping_mul(0x8CB92BA72F3D8DD7))
        | 1
}

/// Impute a train/test pair: statistics (means, modes, neighbor pools)
/// come from the training rows only.
pub fn impute_train_test(
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    config: &ImputeConfig,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    match config.method {
        ImputeMethod::Mean => {
            let imputer = MeanImputer::fit(train);
            Ok((imputer.apply(train)?, imputer.apply(test)?))
        }
        ImputeMethod::Knn => {
            let imputer = KnnImputer::fit(train, config)?;
            Ok((imputer.apply_to_train()?, imputer.apply(test)?))
        }
    }
}

fn accuracy(y_true: &[usize], y_pred: &[usize]) -> f64 {
    if y_true.is_empty() {
        return 0.0;
    }
    y_true
        .iter()
        .zip(y_pred)
        .filter(|(a, b)| a == b)
        .count() as f64
        / y_true.len() as f64
}

struct PreparedSplit {
    x_train: crate::features::EncodedMatrix,
    y_train: Labels,
    x_test: crate::features::EncodedMatrix,
    y_test: Vec<usize>,
}

fn prepare_split(
    matrix: &FeatureMatrix,
    labels: &LabelVector,
    train_rows: &[usize],
    test_rows: &[usize],
    impute_config: &ImputeConfig,
) -> Result<PreparedSplit> {
    let train_matrix = matrix.select_rows(train_rows);
    let test_matrix = matrix.select_rows(test_rows);
    let (train_imputed, test_imputed) =
        impute_train_test(&train_matrix, &test_matrix, impute_config)?;
    Ok(PreparedSplit {
        x_train: one_hot_encode(&train_imputed)?,
        y_train: Labels::from(&labels.select(train_rows)),
        x_test: one_hot_encode(&test_imputed)?,
        y_test: labels.select(test_rows).values,
    })
}

/// Nested cross-validation for one model family on one disease.
///
/// `grid` is searched per outer fold by mean inner-fold accuracy; ties
/// go to the earlier grid entry, and a single-candidate grid reduces to
/// plain k-fold evaluation of that candidate.
pub fn nested_cv(
    grid: &[ModelParams],
    impute_config: &ImputeConfig,
    matrix: &FeatureMatrix,
    labels: &LabelVector,
    k_outer: usize,
    k_inner: usize,
    seed: u64,
) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(crate::Error::InvalidConfig(
            "empty hyperparameter grid".to_string(),
        ));
    }
    let n_classes = labels.disease.class_names().len();
    let positive = labels.disease.positive_class();
    let outer = stratified_kfold(&labels.values, n_classes, k_outer, seed)?;

    let fold_outcomes: Vec<Result<FoldOutcome>> = (0..k_outer)
        .into_par_iter()
        .map(|fold| {
            let (train_rows, test_rows) = outer.split(fold);
            let y_outer_train: Vec<usize> =
                train_rows.iter().map(|&r| labels.values[r]).collect();

            let chosen = if grid.len() == 1 {
                grid[0].clone()
            } else {
                let inner = stratified_kfold(
                    &y_outer_train,
                    n_classes,
                    k_inner,
                    derive_seed(seed, fold as u64, 0),
                )?;
                // imputation and encoding are shared by all candidates
                let splits: Vec<PreparedSplit> = (0..k_inner)
                    .map(|inner_fold| {
                        let (tr, va) = inner.split(inner_fold);
                        let tr_rows: Vec<usize> = tr.iter().map(|&i| train_rows[i]).collect();
                        let va_rows: Vec<usize> = va.iter().map(|&i| train_rows[i]).collect();
                        prepare_split(matrix, labels, &tr_rows, &va_rows, impute_config)
                    })
                    .collect::<Result<_>>()?;

                let mean_scores: Vec<f64> = grid
                    .par_iter()
                    .enumerate()
                    .map(|(c, candidate)| {
                        let mut total = 0.0;
                        for split in &splits {
                            let spec = ClassifierSpec::new(
                                candidate.clone(),
                                derive_seed(seed, fold as u64, c as u64 + 1),
                            );
                            let model = learners::fit(&spec, &split.x_train, &split.y_train)?;
                            let preds = model.predict(&split.x_test)?;
                            total += accuracy(&split.y_test, &preds);
                        }
                        Ok(total / k_inner as f64)
                    })
                    .collect::<Result<_>>()?;

                let best = mean_scores
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
                    .map(|(c, _)| c)
                    .unwrap();
                grid[best].clone()
            };

            let split = prepare_split(matrix, labels, &train_rows, &test_rows, impute_config)?;
            let spec = ClassifierSpec::new(chosen.clone(), derive_seed(seed, fold as u64, 0));
            let model = learners::fit(&spec, &split.x_train, &split.y_train)?;
            let preds = model.predict(&split.x_test)?;
            let fold_metrics = compute_metrics(&split.y_test, &preds, n_classes, positive)?;
            Ok(FoldOutcome {
                chosen,
                metrics: fold_metrics,
            })
        })
        .collect();

    let folds: Vec<FoldOutcome> = fold_outcomes.into_iter().collect::<Result<_>>()?;
    let mean = MetricSet::mean_of(&folds.iter().map(|f| f.metrics).collect::<Vec<_>>());
    Ok(CvResult { mean, folds })
}

/// One line of the comparison report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub disease: Disease,
    /// Model family, or the expert-rule variant name.
    pub model: String,
    /// "KNNI", "MI", or "-" for the raw expert rule.
    pub imputation: String,
    pub metrics: MetricSet,
    pub folds: Vec<FoldOutcome>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn find(&self, disease: Disease, model: &str, imputation: &str) -> Option<&EvalRow> {
        self.rows
            .iter()
            .find(|r| r.disease == disease && r.model == model && r.imputation == imputation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub k_outer: usize,
    pub k_inner: usize,
    pub seed: u64,
    pub grids: Grids,
    /// Neighbor count for the KNNI arm of the comparison.
    pub knn_impute_k: usize,
    pub systolic_threshold: f64,
    pub diastolic_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k_outer: 5,
            k_inner: 5,
            seed: 42,
            grids: Grids::default(),
            knn_impute_k: crate::impute::DEFAULT_KNN_K,
            systolic_threshold: expert::DEFAULT_SYSTOLIC_THRESHOLD,
            diastolic_threshold: expert::DEFAULT_DIASTOLIC_THRESHOLD,
        }
    }
}

impl EvalConfig {
    pub fn impute_configs(&self) -> [ImputeConfig; 2] {
        [
            ImputeConfig::knn(self.knn_impute_k),
            ImputeConfig::mean(),
        ]
    }
}

fn expert_rows(
    cohort: &Cohort,
    matrix: &FeatureMatrix,
    config: &EvalConfig,
) -> Result<Vec<EvalRow>> {
    let labels = LabelVector::from_profiles(Disease::Hypertension, &cohort.profiles);
    let mut rows = Vec::new();

    // raw rule over participants that have readings at all
    let histories = expert::bp_histories(cohort);
    let mut y_true = Vec::new();
    let mut y_pred = Vec::new();
    for (profile, &label) in cohort.profiles.iter().zip(&labels.values) {
        if let Some(readings) = histories.get(&profile.id) {
            y_true.push(label);
            y_pred.push(usize::from(expert_rule_raw(
                readings,
                config.systolic_threshold,
                config.diastolic_threshold,
            )));
        }
    }
    rows.push(EvalRow {
        disease: Disease::Hypertension,
        model: "ExpertRule(w/o MV)".to_string(),
        imputation: "-".to_string(),
        metrics: compute_metrics(&y_true, &y_pred, 2, 1)?,
        folds: Vec::new(),
    });

    for impute_config in config.impute_configs() {
        let imputed = crate::impute::impute(matrix, &impute_config)?;
        let fired = expert::imputed_rule_predictions(
            &imputed,
            config.systolic_threshold,
            config.diastolic_threshold,
        );
        let y_pred: Vec<usize> = fired.into_iter().map(usize::from).collect();
        rows.push(EvalRow {
            disease: Disease::Hypertension,
            model: "ExpertRule".to_string(),
            imputation: impute_config.method.as_str().to_string(),
            metrics: compute_metrics(&labels.values, &y_pred, 2, 1)?,
            folds: Vec::new(),
        });
    }
    Ok(rows)
}

/// The full comparison: every model family under both imputation
/// methods for every disease, plus the expert-rule baselines for
/// hypertension.
pub fn evaluate_all(
    cohort: &Cohort,
    matrix: &FeatureMatrix,
    config: &EvalConfig,
) -> Result<EvalReport> {
    let mut tasks = Vec::new();
    for disease in Disease::ALL {
        for kind in ClassifierKind::ALL {
            for impute_config in config.impute_configs() {
                tasks.push((disease, kind, impute_config));
            }
        }
    }

    let rows: Vec<EvalRow> = tasks
        .into_par_iter()
        .map(|(disease, kind, impute_config)| {
            let labels = LabelVector::from_profiles(disease, &cohort.profiles);
            let grid = config.grids.for_kind(kind);
            let result = nested_cv(
                &grid,
                &impute_config,
                matrix,
                &labels,
                config.k_outer,
                config.k_inner,
                config.seed,
            )?;
            Ok(EvalRow {
                disease,
                model: kind.as_str().to_string(),
                imputation: impute_config.method.as_str().to_string(),
                metrics: result.mean,
                folds: result.folds,
            })
        })
        .collect::<Result<_>>()?;

    let mut report = EvalReport { rows };
    report.rows.extend(expert_rows(cohort, matrix, config)?);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Cell, ColumnSpec, ParticipantId};

    /// Numeric matrix with one informative column and one junk column;
    /// labels follow the informative column's sign.
    fn toy_matrix(n: usize) -> (FeatureMatrix, LabelVector) {
        let schema = vec![
            ColumnSpec::numeric("signal", None),
            ColumnSpec::numeric("junk", None),
        ];
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let x = if i % 2 == 0 { -1.0 } else { 1.0 };
            let wiggle = (i as f64 * 0.37).sin() * 0.3;
            values.push(vec![Cell::Number(x + wiggle), Cell::Number((i % 7) as f64)]);
            labels.push(usize::from(i % 2 == 1));
        }
        let ids: Vec<ParticipantId> = (0..n).map(|i| ParticipantId(format!("p{i}"))).collect();
        let matrix = FeatureMatrix::new(schema, ids, values).unwrap();
        let labels = LabelVector::new(Disease::Hypertension, labels).unwrap();
        (matrix, labels)
    }

    #[test]
    fn single_candidate_grid_reduces_to_plain_kfold() {
        let (matrix, labels) = toy_matrix(60);
        let candidate = ModelParams::Knn(KnnParams {
            k: 3,
            standardize: true,
        });
        let nested = nested_cv(
            std::slice::from_ref(&candidate),
            &ImputeConfig::mean(),
            &matrix,
            &labels,
            5,
            3,
            11,
        )
        .unwrap();

        // manual plain k-fold with the same candidate and seeding
        let outer = stratified_kfold(&labels.values, 2, 5, 11).unwrap();
        let mut manual = Vec::new();
        for fold in 0..5 {
            let (train_rows, test_rows) = outer.split(fold);
            let split =
                prepare_split(&matrix, &labels, &train_rows, &test_rows, &ImputeConfig::mean())
                    .unwrap();
            let spec = ClassifierSpec::new(candidate.clone(), derive_seed(11, fold as u64, 0));
            let model = learners::fit(&spec, &split.x_train, &split.y_train).unwrap();
            let preds = model.predict(&split.x_test).unwrap();
            manual.push(compute_metrics(&split.y_test, &preds, 2, 1).unwrap());
        }
        let manual_mean = MetricSet::mean_of(&manual);
        assert_eq!(nested.mean, manual_mean);
    }

    #[test]
    fn learnable_signal_scores_high() {
        let (matrix, labels) = toy_matrix(80);
        let grid = vec![
            ModelParams::Knn(KnnParams {
                k: 1,
                standardize: true,
            }),
            ModelParams::Knn(KnnParams {
                k: 5,
                standardize: true,
            }),
        ];
        let result = nested_cv(
            &grid,
            &ImputeConfig::mean(),
            &matrix,
            &labels,
            4,
            3,
            3,
        )
        .unwrap();
        assert!(result.mean.accuracy > 0.9, "accuracy {}", result.mean.accuracy);
        assert_eq!(result.folds.len(), 4);
    }

    #[test]
    fn imputation_statistics_come_from_training_rows_only() {
        // train rows carry value 10 in a column that is missing on the
        // test row; the test row's own (absurd) values must not be used
        let schema = vec![
            ColumnSpec::numeric("anchor", None),
            ColumnSpec::numeric("gappy", None),
        ];
        let values = vec![
            vec![Cell::Number(1.0), Cell::Number(10.0)],
            vec![Cell::Number(2.0), Cell::Number(10.0)],
            vec![Cell::Number(3.0), Cell::Number(10.0)],
            vec![Cell::Number(4.0), Cell::Missing],
        ];
        let ids: Vec<ParticipantId> = (0..4).map(|i| ParticipantId(format!("p{i}"))).collect();
        let matrix = FeatureMatrix::new(schema, ids, values).unwrap();

        let train = matrix.select_rows(&[0, 1, 2]);
        let test = matrix.select_rows(&[3]);
        let (_, test_imputed) =
            impute_train_test(&train, &test, &ImputeConfig::mean()).unwrap();
        assert_eq!(test_imputed.cell(0, 1).as_number(), Some(10.0));
    }

    #[test]
    fn nested_cv_is_deterministic() {
        let (matrix, labels) = toy_matrix(50);
        let grid = Grids::default().for_kind(ClassifierKind::Knn);
        let run = || {
            nested_cv(
                &grid,
                &ImputeConfig::mean(),
                &matrix,
                &labels,
                5,
                3,
                99,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn default_grids_match_published_sizes() {
        let grids = Grids::default();
        assert_eq!(grids.rf.len(), 6);
        assert_eq!(grids.gbt.len(), 8);
        assert_eq!(grids.knn.len(), 3);
        assert_eq!(grids.svm.len(), 3);
    }
}
