//! Missing-value imputation: column means/modes, or values borrowed
//! from the k most similar participants.
//!
//! Similarity for the neighbor search uses only fully observed anchor
//! attributes (age, gender, ethnicity, BMI by default): standardized
//! squared differences for numeric anchors plus a 0/1 mismatch term for
//! categorical ones, square-rooted. Both imputers come in a fit/apply
//! form so cross-validation can learn statistics on training folds only.

use crate::domain::{Cell, ColumnKind, FeatureMatrix};
use crate::error::Error;
use crate::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_KNN_K: usize = 200;

pub fn default_anchor_attributes() -> Vec<String> {
    ["age", "gender", "ethnicity", "bmi"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ImputeMethod {
    /// Column mean (numeric) or majority category (categorical).
    Mean,
    /// Average / majority over the k nearest rows by anchor distance.
    Knn,
}

impl ImputeMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ImputeMethod::Mean => "MI",
            ImputeMethod::Knn => "KNNI",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "MI" | "mi" | "mean" => Some(ImputeMethod::Mean),
            "KNNI" | "knni" | "knn" => Some(ImputeMethod::Knn),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputeConfig {
    pub method: ImputeMethod,
    pub k: usize,
    pub anchor_attributes: Vec<String>,
}

impl ImputeConfig {
    pub fn mean() -> Self {
        ImputeConfig {
            method: ImputeMethod::Mean,
            k: DEFAULT_KNN_K,
            anchor_attributes: default_anchor_attributes(),
        }
    }

    pub fn knn(k: usize) -> Self {
        ImputeConfig {
            method: ImputeMethod::Knn,
            k,
            anchor_attributes: default_anchor_attributes(),
        }
    }
}

impl Default for ImputeConfig {
    fn default() -> Self {
        ImputeConfig::knn(DEFAULT_KNN_K)
    }
}

/// Per-column statistics learned from one matrix: mean and standard
/// deviation for numeric columns, the majority category for categorical
/// ones. A column with no observed values yields `None`.
#[derive(Debug, Clone)]
struct ColumnStats {
    mean: Vec<Option<f64>>,
    std: Vec<f64>,
    mode: Vec<Option<usize>>,
}

fn column_stats(matrix: &FeatureMatrix) -> ColumnStats {
    let n_cols = matrix.n_cols();
    let mut mean = vec![None; n_cols];
    let mut std = vec![0.0; n_cols];
    let mut mode = vec![None; n_cols];

    for (col, spec) in matrix.column_schema.iter().enumerate() {
        match &spec.kind {
            ColumnKind::Numeric => {
                let observed: Vec<f64> = matrix
                    .values
                    .iter()
                    .filter_map(|row| row[col].as_number())
                    .collect();
                if !observed.is_empty() {
                    let m = observed.iter().sum::<f64>() / observed.len() as f64;
                    let var = observed.iter().map(|v| (v - m).powi(2)).sum::<f64>()
                        / observed.len() as f64;
                    mean[col] = Some(m);
                    std[col] = var.sqrt();
                }
            }
            ColumnKind::Categorical { categories } => {
                let mut counts = vec![0usize; categories.len()];
                for row in &matrix.values {
                    if let Some(c) = row[col].as_category() {
                        counts[c] += 1;
                    }
                }
                if counts.iter().any(|&c| c > 0) {
                    // ties break toward the first category in schema order
                    let best = counts
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                        .map(|(i, _)| i);
                    mode[col] = best;
                }
            }
        }
    }

    ColumnStats { mean, std, mode }
}

fn fallback_cell(spec_kind: &ColumnKind, stats: &ColumnStats, col: usize) -> Option<Cell> {
    match spec_kind {
        ColumnKind::Numeric => stats.mean[col].map(Cell::Number),
        ColumnKind::Categorical { .. } => stats.mode[col].map(Cell::Category),
    }
}

/// Mean/mode imputer fitted on one matrix and applicable to another.
#[derive(Debug, Clone)]
pub struct MeanImputer {
    schema_names: Vec<String>,
    stats: ColumnStats,
    kinds: Vec<ColumnKind>,
}

impl MeanImputer {
    pub fn fit(matrix: &FeatureMatrix) -> Self {
        MeanImputer {
            schema_names: matrix
                .column_schema
                .iter()
                .map(|c| c.name.clone())
                .collect(),
            stats: column_stats(matrix),
            kinds: matrix.column_schema.iter().map(|c| c.kind.clone()).collect(),
        }
    }

    /// Fill every missing cell from the fitted statistics. Errors if a
    /// needed column had no observed values at fit time.
    pub fn apply(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        let mut out = matrix.clone();
        for row in &mut out.values {
            for (col, cell) in row.iter_mut().enumerate() {
                if cell.is_missing() {
                    *cell = fallback_cell(&self.kinds[col], &self.stats, col)
                        .ok_or_else(|| Error::FullyMissingColumn(self.schema_names[col].clone()))?;
                }
            }
        }
        Ok(out)
    }
}

/// Fill missing cells with column means (numeric) or majority
/// categories (categorical); observed cells are untouched.
pub fn mean_impute(matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
    MeanImputer::fit(matrix).apply(matrix)
}

/// Anchor columns resolved to indices, with cohort standard deviations
/// for the numeric ones.
#[derive(Debug, Clone)]
struct AnchorSet {
    columns: Vec<usize>,
    numeric: Vec<bool>,
    std: Vec<f64>,
}

fn resolve_anchors(matrix: &FeatureMatrix, names: &[String]) -> Result<AnchorSet> {
    let mut columns = Vec::with_capacity(names.len());
    let mut numeric = Vec::with_capacity(names.len());
    for name in names {
        let col = matrix
            .column_index(name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown anchor column '{name}'")))?;
        for row in &matrix.values {
            if row[col].is_missing() {
                return Err(Error::MissingAnchor(name.clone()));
            }
        }
        columns.push(col);
        numeric.push(matrix.column_schema[col].is_numeric());
    }
    let stats = column_stats(matrix);
    let std = columns.iter().map(|&c| stats.std[c]).collect();
    Ok(AnchorSet {
        columns,
        numeric,
        std,
    })
}

/// Anchor-feature distance between two rows: standardized Euclidean
/// over numeric anchors plus 0/1 mismatch over categorical ones. A
/// zero-variance numeric anchor contributes nothing.
pub fn knn_distance(
    row_a: &[Cell],
    row_b: &[Cell],
    anchors: &[(usize, bool, f64)],
) -> f64 {
    let mut sum = 0.0;
    for &(col, numeric, std) in anchors {
        if numeric {
            if std > 0.0 {
                let a = row_a[col].as_number().unwrap_or(0.0);
                let b = row_b[col].as_number().unwrap_or(0.0);
                let d = (a - b) / std;
                sum += d * d;
            }
        } else {
            let a = row_a[col].as_category();
            let b = row_b[col].as_category();
            if a != b {
                sum += 1.0;
            }
        }
    }
    sum.sqrt()
}

/// Neighbor imputer fitted on a training matrix. Applying it to the
/// training matrix itself excludes each row from its own neighbor set;
/// applying it to new rows searches all training rows.
#[derive(Debug, Clone)]
pub struct KnnImputer {
    train: FeatureMatrix,
    stats: ColumnStats,
    anchors: AnchorSet,
    k: usize,
}

impl KnnImputer {
    pub fn fit(train: &FeatureMatrix, config: &ImputeConfig) -> Result<Self> {
        if config.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".to_string()));
        }
        let anchors = resolve_anchors(train, &config.anchor_attributes)?;
        Ok(KnnImputer {
            train: train.clone(),
            stats: column_stats(train),
            anchors,
            k: config.k,
        })
    }

    fn anchor_triples(&self) -> Vec<(usize, bool, f64)> {
        self.anchors
            .columns
            .iter()
            .zip(&self.anchors.numeric)
            .zip(&self.anchors.std)
            .map(|((&c, &n), &s)| (c, n, s))
            .collect()
    }

    /// Indices of the k training rows nearest to `row`, ties broken by
    /// ascending training-row index. `exclude` skips the row itself
    /// when imputing the training matrix in place.
    fn neighbors(&self, row: &[Cell], exclude: Option<usize>) -> Vec<usize> {
        let anchors = self.anchor_triples();
        let mut scored: Vec<(f64, usize)> = self
            .train
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != exclude)
            .map(|(i, other)| (knn_distance(row, other, &anchors), i))
            .collect();
        let k = self.k.min(scored.len());
        if k == 0 {
            return Vec::new();
        }
        // partial selection, then order the shortlist
        scored.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap());
        scored.truncate(k);
        scored.sort_by(|a, b| a.partial_cmp(b).unwrap());
        scored.into_iter().map(|(_, i)| i).collect()
    }

    fn impute_row(&self, row: &[Cell], exclude: Option<usize>) -> Result<Vec<Cell>> {
        if !row.iter().any(Cell::is_missing) {
            return Ok(row.to_vec());
        }
        let neighbors = self.neighbors(row, exclude);
        let mut out = row.to_vec();
        for (col, cell) in out.iter_mut().enumerate() {
            if !cell.is_missing() {
                continue;
            }
            let kind = &self.train.column_schema[col].kind;
            let filled = match kind {
                ColumnKind::Numeric => {
                    let observed: Vec<f64> = neighbors
                        .iter()
                        .filter_map(|&n| self.train.values[n][col].as_number())
                        .collect();
                    if observed.is_empty() {
                        None
                    } else {
                        Some(Cell::Number(
                            observed.iter().sum::<f64>() / observed.len() as f64,
                        ))
                    }
                }
                ColumnKind::Categorical { categories } => {
                    let mut counts = vec![0usize; categories.len()];
                    let mut any = false;
                    for &n in &neighbors {
                        if let Some(c) = self.train.values[n][col].as_category() {
                            counts[c] += 1;
                            any = true;
                        }
                    }
                    if any {
                        counts
                            .iter()
                            .enumerate()
                            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                            .map(|(i, _)| Cell::Category(i))
                    } else {
                        None
                    }
                }
            };
            // all neighbors missing this column: fall back to the
            // training-wide mean/mode
            *cell = match filled {
                Some(c) => c,
                None => fallback_cell(kind, &self.stats, col).ok_or_else(|| {
                    Error::FullyMissingColumn(self.train.column_schema[col].name.clone())
                })?,
            };
        }
        Ok(out)
    }

    /// Impute the training matrix itself. Each row's neighbor search
    /// reads the original matrix only, so parallel rows never observe
    /// partially imputed neighbors.
    pub fn apply_to_train(&self) -> Result<FeatureMatrix> {
        let rows: Vec<Result<Vec<Cell>>> = self
            .train
            .values
            .par_iter()
            .enumerate()
            .map(|(i, row)| self.impute_row(row, Some(i)))
            .collect();
        let mut out = self.train.clone();
        out.values = rows.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(out)
    }

    /// Impute new rows against the fitted training matrix.
    pub fn apply(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        let rows: Vec<Result<Vec<Cell>>> = matrix
            .values
            .par_iter()
            .map(|row| self.impute_row(row, None))
            .collect();
        let mut out = matrix.clone();
        out.values = rows.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(out)
    }
}

/// Impute a matrix from its own k nearest neighbors per row.
pub fn knn_impute(matrix: &FeatureMatrix, config: &ImputeConfig) -> Result<FeatureMatrix> {
    KnnImputer::fit(matrix, config)?.apply_to_train()
}

/// Dispatch on the configured method, imputing a matrix in place.
pub fn impute(matrix: &FeatureMatrix, config: &ImputeConfig) -> Result<FeatureMatrix> {
    match config.method {
        ImputeMethod::Mean => mean_impute(matrix),
        ImputeMethod::Knn => knn_impute(matrix, config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ColumnSpec;

    fn numeric_matrix(values: Vec<Vec<Cell>>) -> FeatureMatrix {
        let n_cols = values[0].len();
        let schema: Vec<ColumnSpec> = (0..n_cols)
            .map(|i| ColumnSpec::numeric(&format!("c{i}"), None))
            .collect();
        let ids = (0..values.len())
            .map(|i| format!("p{i}").as_str().into())
            .collect();
        FeatureMatrix::new(schema, ids, values).unwrap()
    }

    #[test]
    fn mean_impute_fills_with_column_mean() {
        let matrix = numeric_matrix(vec![
            vec![Cell::Number(2.0)],
            vec![Cell::Number(4.0)],
            vec![Cell::Missing],
        ]);
        let imputed = mean_impute(&matrix).unwrap();
        assert_eq!(imputed.cell(2, 0).as_number(), Some(3.0));
        assert_eq!(imputed.cell(0, 0).as_number(), Some(2.0));
    }

    #[test]
    fn mean_impute_uses_mode_for_categorical() {
        let schema = vec![ColumnSpec::categorical("c", &["a", "b"])];
        let matrix = FeatureMatrix::new(
            schema,
            vec!["p0".into(), "p1".into(), "p2".into(), "p3".into()],
            vec![
                vec![Cell::Category(0)],
                vec![Cell::Category(0)],
                vec![Cell::Category(1)],
                vec![Cell::Missing],
            ],
        )
        .unwrap();
        let imputed = mean_impute(&matrix).unwrap();
        assert_eq!(imputed.cell(3, 0).as_category(), Some(0));
    }

    #[test]
    fn mean_impute_mode_tie_breaks_by_schema_order() {
        let schema = vec![ColumnSpec::categorical("c", &["a", "b"])];
        let matrix = FeatureMatrix::new(
            schema,
            vec!["p0".into(), "p1".into(), "p2".into()],
            vec![
                vec![Cell::Category(1)],
                vec![Cell::Category(0)],
                vec![Cell::Missing],
            ],
        )
        .unwrap();
        let imputed = mean_impute(&matrix).unwrap();
        assert_eq!(imputed.cell(2, 0).as_category(), Some(0));
    }

    #[test]
    fn mean_impute_errors_on_fully_missing_column() {
        let matrix = numeric_matrix(vec![vec![Cell::Missing], vec![Cell::Missing]]);
        assert!(matches!(
            mean_impute(&matrix),
            Err(Error::FullyMissingColumn(_))
        ));
    }

    #[test]
    fn mean_impute_preserves_column_mean() {
        let matrix = numeric_matrix(vec![
            vec![Cell::Number(1.0)],
            vec![Cell::Number(5.0)],
            vec![Cell::Missing],
            vec![Cell::Number(9.0)],
            vec![Cell::Missing],
        ]);
        let before = 5.0;
        let imputed = mean_impute(&matrix).unwrap();
        let after: f64 = imputed
            .values
            .iter()
            .map(|r| r[0].as_number().unwrap())
            .sum::<f64>()
            / imputed.n_rows() as f64;
        assert!((after - before).abs() / before < 1e-9);
    }

    fn anchored_matrix() -> FeatureMatrix {
        // age numeric anchor, gender categorical anchor, value imputable
        let schema = vec![
            ColumnSpec::numeric("age", None),
            ColumnSpec::categorical("gender", &["female", "male"]),
            ColumnSpec::numeric("value", None),
        ];
        FeatureMatrix::new(
            schema,
            (0..5).map(|i| format!("p{i}").as_str().into()).collect(),
            vec![
                vec![Cell::Number(50.0), Cell::Category(0), Cell::Missing],
                vec![Cell::Number(51.0), Cell::Category(0), Cell::Number(5.0)],
                vec![Cell::Number(49.0), Cell::Category(0), Cell::Number(7.0)],
                vec![Cell::Number(80.0), Cell::Category(1), Cell::Number(100.0)],
                vec![Cell::Number(81.0), Cell::Category(1), Cell::Number(102.0)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn knn_imputes_from_nearest_neighbors() {
        let matrix = anchored_matrix();
        let config = ImputeConfig {
            method: ImputeMethod::Knn,
            k: 2,
            anchor_attributes: vec!["age".to_string(), "gender".to_string()],
        };
        let imputed = knn_impute(&matrix, &config).unwrap();
        // the two nearest rows by age+gender carry 5.0 and 7.0
        assert_eq!(imputed.cell(0, 2).as_number(), Some(6.0));
    }

    #[test]
    fn knn_falls_back_to_global_mean_when_neighbors_missing() {
        let schema = vec![
            ColumnSpec::numeric("age", None),
            ColumnSpec::numeric("value", None),
        ];
        let matrix = FeatureMatrix::new(
            schema,
            (0..4).map(|i| format!("p{i}").as_str().into()).collect(),
            vec![
                vec![Cell::Number(50.0), Cell::Missing],
                vec![Cell::Number(50.5), Cell::Missing],
                vec![Cell::Number(49.5), Cell::Missing],
                vec![Cell::Number(90.0), Cell::Number(9.0)],
            ],
        )
        .unwrap();
        let config = ImputeConfig {
            method: ImputeMethod::Knn,
            k: 2,
            anchor_attributes: vec!["age".to_string()],
        };
        let imputed = knn_impute(&matrix, &config).unwrap();
        // row 0's two nearest neighbors are both missing; global mean is 9.0
        assert_eq!(imputed.cell(0, 1).as_number(), Some(9.0));
    }

    #[test]
    fn knn_clamps_k_to_available_rows() {
        let matrix = anchored_matrix();
        let config = ImputeConfig {
            method: ImputeMethod::Knn,
            k: 200,
            anchor_attributes: vec!["age".to_string(), "gender".to_string()],
        };
        let imputed = knn_impute(&matrix, &config).unwrap();
        // with all 4 other rows as neighbors the fill is their mean
        assert_eq!(imputed.cell(0, 2).as_number(), Some(53.5));
    }

    #[test]
    fn knn_errors_on_missing_anchor() {
        let schema = vec![
            ColumnSpec::numeric("age", None),
            ColumnSpec::numeric("value", None),
        ];
        let matrix = FeatureMatrix::new(
            schema,
            vec!["p0".into(), "p1".into()],
            vec![
                vec![Cell::Missing, Cell::Number(1.0)],
                vec![Cell::Number(60.0), Cell::Number(2.0)],
            ],
        )
        .unwrap();
        let config = ImputeConfig {
            method: ImputeMethod::Knn,
            k: 1,
            anchor_attributes: vec!["age".to_string()],
        };
        assert!(matches!(
            knn_impute(&matrix, &config),
            Err(Error::MissingAnchor(_))
        ));
    }

    #[test]
    fn imputation_never_alters_observed_cells_and_clears_missing() {
        let matrix = anchored_matrix();
        for config in [
            ImputeConfig::mean(),
            ImputeConfig {
                method: ImputeMethod::Knn,
                k: 3,
                anchor_attributes: vec!["age".to_string(), "gender".to_string()],
            },
        ] {
            let imputed = impute(&matrix, &config).unwrap();
            assert!(!imputed.has_missing());
            for (row, orig) in imputed.values.iter().zip(&matrix.values) {
                for (new_cell, old_cell) in row.iter().zip(orig) {
                    if !old_cell.is_missing() {
                        assert_eq!(new_cell, old_cell);
                    }
                }
            }
        }
    }

    #[test]
    fn distance_properties() {
        let anchors = vec![(0, true, 2.0), (1, false, 0.0)];
        let a = vec![Cell::Number(50.0), Cell::Category(0)];
        let b = vec![Cell::Number(52.0), Cell::Category(0)];
        let c = vec![Cell::Number(50.0), Cell::Category(1)];
        assert_eq!(knn_distance(&a, &a, &anchors), 0.0);
        // one standard deviation apart in the numeric anchor
        assert_eq!(knn_distance(&a, &b, &anchors), 1.0);
        // categorical mismatch only
        assert_eq!(knn_distance(&a, &c, &anchors), 1.0);
        // symmetry
        assert_eq!(knn_distance(&a, &b, &anchors), knn_distance(&b, &a, &anchors));
    }

    #[test]
    fn fitted_imputer_fills_new_rows_from_training_stats() {
        let train = anchored_matrix();
        let config = ImputeConfig {
            method: ImputeMethod::Knn,
            k: 2,
            anchor_attributes: vec!["age".to_string(), "gender".to_string()],
        };
        let imputer = KnnImputer::fit(&train, &config).unwrap();
        let test = FeatureMatrix::new(
            train.column_schema.clone(),
            vec!["t0".into()],
            vec![vec![Cell::Number(50.2), Cell::Category(0), Cell::Missing]],
        )
        .unwrap();
        let imputed = imputer.apply(&test).unwrap();
        // nearest rows are p0 (value missing) and p1 (5.0); the fill
        // averages observed values only
        assert_eq!(imputed.cell(0, 2).as_number(), Some(5.0));
    }
}
