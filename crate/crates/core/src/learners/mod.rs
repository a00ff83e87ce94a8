//! Four from-scratch classifiers behind one fit/predict interface:
//! random forest, gradient-boosted trees, k-nearest neighbors, and a
//! linear soft-margin SVM.
//!
//! All learners require fully imputed input. Fitting is deterministic
//! for a fixed (spec, data) pair regardless of worker count: any
//! randomized component draws from an RNG stream derived from the spec
//! seed and its own index.

pub mod boost;
pub mod forest;
pub mod knn;
pub mod svm;
pub mod tree;

use crate::domain::LabelVector;
use crate::error::Error;
use crate::features::EncodedMatrix;
use crate::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    Rf,
    Gbt,
    Knn,
    Svm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::Gbt,
        ClassifierKind::Rf,
        ClassifierKind::Svm,
        ClassifierKind::Knn,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierKind::Rf => "RF",
            ClassifierKind::Gbt => "GBT",
            ClassifierKind::Knn => "KNN",
            ClassifierKind::Svm => "SVM",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "RF" | "rf" => Some(ClassifierKind::Rf),
            "GBT" | "gbt" => Some(ClassifierKind::Gbt),
            "KNN" | "knn" => Some(ClassifierKind::Knn),
            "SVM" | "svm" => Some(ClassifierKind::Svm),
            _ => None,
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RfParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Candidate features per split; `None` means floor(sqrt(p)).
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
}

impl Default for RfParams {
    fn default() -> Self {
        RfParams {
            n_trees: 100,
            max_depth: None,
            min_leaf: 1,
            features_per_split: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub l2_leaf_penalty: f64,
    pub min_split_gain: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_rounds: 100,
            learning_rate: 0.3,
            max_depth: 3,
            l2_leaf_penalty: 1.0,
            min_split_gain: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnnParams {
    pub k: usize,
    pub standardize: bool,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams {
            k: 11,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmParams {
    pub c: f64,
    pub max_epochs: usize,
    pub tolerance: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            max_epochs: 400,
            tolerance: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelParams {
    Rf(RfParams),
    Gbt(GbtParams),
    Knn(KnnParams),
    Svm(SvmParams),
}

impl ModelParams {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ModelParams::Rf(_) => ClassifierKind::Rf,
            ModelParams::Gbt(_) => ClassifierKind::Gbt,
            ModelParams::Knn(_) => ClassifierKind::Knn,
            ModelParams::Svm(_) => ClassifierKind::Svm,
        }
    }

    /// Short human-readable form for reports.
    pub fn describe(&self) -> String {
        match self {
            ModelParams::Rf(p) => format!(
                "n_trees={} max_depth={}",
                p.n_trees,
                p.max_depth.map_or("none".to_string(), |d| d.to_string())
            ),
            ModelParams::Gbt(p) => format!(
                "n_rounds={} lr={} max_depth={}",
                p.n_rounds, p.learning_rate, p.max_depth
            ),
            ModelParams::Knn(p) => format!("k={}", p.k),
            ModelParams::Svm(p) => format!("C={}", p.c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub params: ModelParams,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(params: ModelParams, seed: u64) -> Self {
        ClassifierSpec { params, seed }
    }

    pub fn kind(&self) -> ClassifierKind {
        self.params.kind()
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        match &self.params {
            ModelParams::Rf(p) => {
                if p.n_trees == 0 || p.min_leaf == 0 {
                    return bad("RF counts must be at least 1");
                }
                if p.features_per_split == Some(0) {
                    return bad("features_per_split must be at least 1");
                }
            }
            ModelParams::Gbt(p) => {
                if p.n_rounds == 0 || p.max_depth == 0 {
                    return bad("GBT counts must be at least 1");
                }
                if p.learning_rate <= 0.0 {
                    return bad("learning_rate must be positive");
                }
                if p.l2_leaf_penalty < 0.0 || p.min_split_gain < 0.0 {
                    return bad("GBT penalties must be non-negative");
                }
            }
            ModelParams::Knn(p) => {
                if p.k == 0 {
                    return bad("k must be at least 1");
                }
            }
            ModelParams::Svm(p) => {
                if p.c <= 0.0 {
                    return bad("C must be positive");
                }
                if p.max_epochs == 0 {
                    return bad("max_epochs must be at least 1");
                }
            }
        }
        Ok(())
    }
}

/// Class names plus per-row class indices; the learner-facing label
/// form, convertible from a [`LabelVector`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    pub classes: Vec<String>,
    pub values: Vec<usize>,
}

impl Labels {
    pub fn new(classes: Vec<String>, values: Vec<usize>) -> Self {
        Labels { classes, values }
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }
}

impl From<&LabelVector> for Labels {
    fn from(labels: &LabelVector) -> Self {
        Labels {
            classes: labels
                .disease
                .class_names()
                .iter()
                .map(|s| s.to_string())
                .collect(),
            values: labels.values.clone(),
        }
    }
}

/// Column-wise standardization statistics shared by KNN and the SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>], n_cols: usize) -> Self {
        let n = rows.len().max(1) as f64;
        let mut means = vec![0.0; n_cols];
        for row in rows {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut stds = vec![0.0; n_cols];
        for row in rows {
            for (s, (v, m)) in stds.iter_mut().zip(row.iter().zip(&means)) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut stds {
            *s = (*s / n).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Standardizer { means, stds }
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn apply(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply_row(r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedModel {
    Forest(forest::Forest),
    Boost(boost::Boost),
    Knn(knn::KnnFitted),
    Svm(svm::SvmFitted),
}

/// A fitted classifier with the schema fingerprint of its training
/// matrix; prediction refuses any matrix whose fingerprint differs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ClassifierSpec,
    pub classes: Vec<String>,
    pub schema_fingerprint: String,
    pub model: FittedModel,
}

fn check_training_input(x: &EncodedMatrix, y: &Labels) -> Result<()> {
    if x.n_rows() != y.values.len() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: y.values.len(),
            context: "rows vs labels",
        });
    }
    if !x.missing.is_empty() {
        return Err(Error::MissingCells);
    }
    let mut seen = vec![false; y.n_classes()];
    for &v in &y.values {
        seen[v] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Fit a classifier. `y` values index into `y.classes`; at least two
/// classes must be present.
pub fn fit(spec: &ClassifierSpec, x: &EncodedMatrix, y: &Labels) -> Result<TrainedModel> {
    spec.validate()?;
    check_training_input(x, y)?;
    let n_classes = y.n_classes();
    let model = match &spec.params {
        ModelParams::Rf(params) => {
            FittedModel::Forest(forest::fit(params, spec.seed, &x.rows, &y.values, n_classes))
        }
        ModelParams::Gbt(params) => {
            FittedModel::Boost(boost::fit(params, &x.rows, &y.values, n_classes))
        }
        ModelParams::Knn(params) => {
            FittedModel::Knn(knn::fit(params, &x.rows, &y.values, n_classes))
        }
        ModelParams::Svm(params) => {
            FittedModel::Svm(svm::fit(params, &x.rows, &y.values, n_classes))
        }
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        classes: y.classes.clone(),
        schema_fingerprint: x.schema_fingerprint(),
        model,
    })
}

impl TrainedModel {
    fn check_schema(&self, x: &EncodedMatrix) -> Result<()> {
        let actual = x.schema_fingerprint();
        if actual != self.schema_fingerprint {
            return Err(Error::SchemaMismatch {
                expected: self.schema_fingerprint.clone(),
                actual,
            });
        }
        if !x.missing.is_empty() {
            return Err(Error::MissingCells);
        }
        Ok(())
    }

    /// Per-row class scores, non-negative and summing to 1.
    pub fn predict_proba(&self, x: &EncodedMatrix) -> Result<Vec<Vec<f64>>> {
        self.check_schema(x)?;
        Ok(self.predict_proba_rows(&x.rows))
    }

    /// Score raw rows that are known to follow the training layout;
    /// used internally by the explanation machinery after its own
    /// schema check.
    pub fn predict_proba_rows(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        match &self.model {
            FittedModel::Forest(m) => forest::predict_proba(m, rows),
            FittedModel::Boost(m) => boost::predict_proba(m, rows),
            FittedModel::Knn(m) => knn::predict_proba(m, rows),
            FittedModel::Svm(m) => svm::predict_proba(m, rows),
        }
    }

    /// One class index per row; always the argmax of `predict_proba`,
    /// ties resolved toward the lower class index.
    pub fn predict(&self, x: &EncodedMatrix) -> Result<Vec<usize>> {
        let probs = self.predict_proba(x)?;
        Ok(probs.iter().map(|p| argmax(p)).collect())
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Feature indices any tree in the model splits on; `None` for
    /// models without trees.
    pub fn used_features(&self) -> Option<std::collections::BTreeSet<usize>> {
        match &self.model {
            FittedModel::Forest(m) => Some(forest::used_features(m)),
            FittedModel::Boost(m) => Some(boost::used_features(m)),
            _ => None,
        }
    }
}

pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}


#[cfg(test)]
mod tests {
    use super::test_data::{blobs, matrix_from_rows};
    use super::*;

    fn labels2(values: Vec<usize>) -> Labels {
        Labels::new(vec!["no".to_string(), "yes".to_string()], values)
    }

    #[test]
    fn fit_rejects_single_class() {
        let (x, _) = blobs(10, 2.0, 1);
        let y = labels2(vec![0; 20]);
        for params in [
            ModelParams::Rf(RfParams::default()),
            ModelParams::Gbt(GbtParams::default()),
            ModelParams::Knn(KnnParams::default()),
            ModelParams::Svm(SvmParams::default()),
        ] {
            let spec = ClassifierSpec::new(params, 0);
            assert!(matches!(fit(&spec, &x, &y), Err(Error::SingleClass)));
        }
    }

    #[test]
    fn fit_rejects_length_mismatch() {
        let (x, _) = blobs(10, 2.0, 1);
        let y = labels2(vec![0, 1]);
        let spec = ClassifierSpec::new(ModelParams::Gbt(GbtParams::default()), 0);
        assert!(matches!(
            fit(&spec, &x, &y),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn fit_rejects_missing_cells() {
        let (mut x, y) = blobs(5, 2.0, 1);
        x.missing.push((0, 0));
        let spec = ClassifierSpec::new(ModelParams::Knn(KnnParams::default()), 0);
        assert!(matches!(
            fit(&spec, &x, &labels2(y)),
            Err(Error::MissingCells)
        ));
    }

    #[test]
    fn predict_rejects_schema_mismatch() {
        let (x, y) = blobs(10, 2.0, 1);
        let spec = ClassifierSpec::new(ModelParams::Knn(KnnParams::default()), 0);
        let model = fit(&spec, &x, &labels2(y)).unwrap();
        let mut other = x.clone();
        other.columns[0].name = "tampered".to_string();
        assert!(matches!(
            model.predict(&other),
            Err(Error::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn all_models_separate_blobs_and_normalize_probas() {
        let (x, y) = blobs(100, 2.0, 42);
        let labels = labels2(y.clone());
        for params in [
            ModelParams::Rf(RfParams {
                n_trees: 50,
                ..RfParams::default()
            }),
            ModelParams::Gbt(GbtParams::default()),
            ModelParams::Knn(KnnParams {
                k: 5,
                standardize: true,
            }),
            ModelParams::Svm(SvmParams {
                c: 10.0,
                max_epochs: 2000,
                tolerance: 0.0,
            }),
        ] {
            let spec = ClassifierSpec::new(params, 7);
            let model = fit(&spec, &x, &labels).unwrap();
            let preds = model.predict(&x).unwrap();
            let accuracy = preds
                .iter()
                .zip(&y)
                .filter(|(a, b)| a == b)
                .count() as f64
                / y.len() as f64;
            assert!(
                accuracy >= 0.95,
                "{} training accuracy {accuracy}",
                spec.kind()
            );

            let probs = model.predict_proba(&x).unwrap();
            for (row, pred) in probs.iter().zip(&preds) {
                let sum: f64 = row.iter().sum();
                assert!((sum - 1.0).abs() < 1e-9);
                assert!(row.iter().all(|&p| p >= 0.0));
                assert_eq!(argmax(row), *pred);
            }
        }
    }

    #[test]
    fn empty_input_predicts_empty() {
        let (x, y) = blobs(10, 2.0, 3);
        let spec = ClassifierSpec::new(ModelParams::Gbt(GbtParams::default()), 0);
        let model = fit(&spec, &x, &labels2(y)).unwrap();
        let mut empty = x.clone();
        empty.rows.clear();
        empty.row_ids.clear();
        assert!(model.predict(&empty).unwrap().is_empty());
    }

    #[test]
    fn permuting_rows_permutes_predictions() {
        let (x, y) = blobs(30, 1.5, 9);
        let spec = ClassifierSpec::new(
            ModelParams::Rf(RfParams {
                n_trees: 20,
                ..RfParams::default()
            }),
            5,
        );
        let model = fit(&spec, &x, &labels2(y)).unwrap();
        let preds = model.predict(&x).unwrap();

        let order: Vec<usize> = (0..x.n_rows()).rev().collect();
        let permuted = matrix_from_rows(order.iter().map(|&i| x.rows[i].clone()).collect());
        let permuted_preds = model.predict(&permuted).unwrap();
        for (new_pos, &old_pos) in order.iter().enumerate() {
            assert_eq!(permuted_preds[new_pos], preds[old_pos]);
        }
    }

    #[test]
    fn fit_is_reproducible() {
        let (x, y) = blobs(50, 1.0, 21);
        let labels = labels2(y);
        let spec = ClassifierSpec::new(
            ModelParams::Rf(RfParams {
                n_trees: 30,
                ..RfParams::default()
            }),
            77,
        );
        let a = fit(&spec, &x, &labels).unwrap();
        let b = fit(&spec, &x, &labels).unwrap();
        assert_eq!(a, b);
    }
}
