//! Tabular feature container with explicit missing-cell state.

use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};

use super::ParticipantId;

/// Column type plus, for categoricals, the closed category set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnKind {
    Numeric,
    Categorical { categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Physical unit for numeric columns, when one applies.
    pub unit: Option<String>,
}

impl ColumnSpec {
    pub fn numeric(name: &str, unit: Option<&str>) -> Self {
        ColumnSpec {
            name: name.to_string(),
            kind: ColumnKind::Numeric,
            unit: unit.map(str::to_string),
        }
    }

    pub fn categorical(name: &str, categories: &[&str]) -> Self {
        ColumnSpec {
            name: name.to_string(),
            kind: ColumnKind::Categorical {
                categories: categories.iter().map(|c| c.to_string()).collect(),
            },
            unit: None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, ColumnKind::Numeric)
    }
}

/// One cell: a value or an explicit missing marker, never a NaN sentinel.
/// Categorical values are indices into the column's category list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Missing,
    Number(f64),
    Category(usize),
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Cell::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_category(&self) -> Option<usize> {
        match self {
            Cell::Category(c) => Some(*c),
            _ => None,
        }
    }

    /// Wrap an optional numeric value, mapping `None` to `Missing`.
    pub fn from_option(value: Option<f64>) -> Cell {
        match value {
            Some(v) => Cell::Number(v),
            None => Cell::Missing,
        }
    }
}

/// Row-major matrix of participants by attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub column_schema: Vec<ColumnSpec>,
    pub row_ids: Vec<ParticipantId>,
    /// `values[row][col]`; every row has `column_schema.len()` cells.
    pub values: Vec<Vec<Cell>>,
}

impl FeatureMatrix {
    pub fn new(
        column_schema: Vec<ColumnSpec>,
        row_ids: Vec<ParticipantId>,
        values: Vec<Vec<Cell>>,
    ) -> Result<Self> {
        if row_ids.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: row_ids.len(),
                right: values.len(),
                context: "row ids vs value rows",
            });
        }
        for row in &values {
            if row.len() != column_schema.len() {
                return Err(Error::LengthMismatch {
                    left: row.len(),
                    right: column_schema.len(),
                    context: "row width vs schema",
                });
            }
        }
        let matrix = FeatureMatrix {
            column_schema,
            row_ids,
            values,
        };
        matrix.check_cells()?;
        Ok(matrix)
    }

    fn check_cells(&self) -> Result<()> {
        for row in &self.values {
            for (cell, spec) in row.iter().zip(&self.column_schema) {
                match (cell, &spec.kind) {
                    (Cell::Missing, _) => {}
                    (Cell::Number(v), ColumnKind::Numeric) => {
                        if !v.is_finite() {
                            return Err(Error::InvalidInput(format!(
                                "non-finite value in numeric column '{}'",
                                spec.name
                            )));
                        }
                    }
                    (Cell::Category(c), ColumnKind::Categorical { categories }) => {
                        if *c >= categories.len() {
                            return Err(Error::UnseenCategory {
                                column: spec.name.clone(),
                                value: format!("#{c}"),
                            });
                        }
                    }
                    _ => {
                        return Err(Error::InvalidInput(format!(
                            "cell type does not match column '{}'",
                            spec.name
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_schema.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_schema.iter().position(|c| c.name == name)
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.values[row][col]
    }

    /// Fraction of missing cells in one column.
    pub fn missing_fraction(&self, col: usize) -> f64 {
        if self.n_rows() == 0 {
            return 0.0;
        }
        let missing = self
            .values
            .iter()
            .filter(|row| row[col].is_missing())
            .count();
        missing as f64 / self.n_rows() as f64
    }

    pub fn has_missing(&self) -> bool {
        self.values
            .iter()
            .any(|row| row.iter().any(Cell::is_missing))
    }

    /// Matrix with the same schema restricted to the given rows (by index).
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            column_schema: self.column_schema.clone(),
            row_ids: rows.iter().map(|&r| self.row_ids[r].clone()).collect(),
            values: rows.iter().map(|&r| self.values[r].clone()).collect(),
        }
    }
}

/// The three target diseases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Disease {
    Diabetes,
    Hyperlipidemia,
    Hypertension,
}

impl Disease {
    pub const ALL: [Disease; 3] = [
        Disease::Diabetes,
        Disease::Hyperlipidemia,
        Disease::Hypertension,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Disease::Diabetes => "diabetes",
            Disease::Hyperlipidemia => "hyperlipidemia",
            Disease::Hypertension => "hypertension",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "diabetes" => Some(Disease::Diabetes),
            "hyperlipidemia" => Some(Disease::Hyperlipidemia),
            "hypertension" => Some(Disease::Hypertension),
            _ => None,
        }
    }

    /// Class names in index order; diabetes is three-class, the rest binary.
    pub fn class_names(&self) -> &'static [&'static str] {
        match self {
            Disease::Diabetes => &["no_DM", "pre_DM", "DM"],
            _ => &["no", "yes"],
        }
    }

    /// Class treated as positive when binarizing for TPR/TNR.
    pub fn positive_class(&self) -> usize {
        match self {
            Disease::Diabetes => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for Disease {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-row class labels for one disease, as indices into
/// [`Disease::class_names`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelVector {
    pub disease: Disease,
    pub values: Vec<usize>,
}

impl LabelVector {
    /// Read one disease's labels off the profiles, in profile order.
    pub fn from_profiles(disease: Disease, profiles: &[super::ParticipantProfile]) -> Self {
        let values = profiles
            .iter()
            .map(|p| match disease {
                Disease::Diabetes => match p.diabetes_label {
                    super::DiabetesStatus::NoDm => 0,
                    super::DiabetesStatus::PreDm => 1,
                    super::DiabetesStatus::Dm => 2,
                },
                Disease::Hyperlipidemia => usize::from(p.hyperlipidemia_label),
                Disease::Hypertension => usize::from(p.hypertension_label),
            })
            .collect();
        LabelVector { disease, values }
    }

    pub fn new(disease: Disease, values: Vec<usize>) -> Result<Self> {
        let n_classes = disease.class_names().len();
        if let Some(&bad) = values.iter().find(|&&v| v >= n_classes) {
            return Err(Error::InvalidInput(format!(
                "label {bad} out of range for {disease}"
            )));
        }
        Ok(LabelVector { disease, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn select(&self, rows: &[usize]) -> LabelVector {
        LabelVector {
            disease: self.disease,
            values: rows.iter().map(|&r| self.values[r]).collect(),
        }
    }

    /// Fraction of rows carrying the most common class.
    pub fn majority_rate(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let n_classes = self.disease.class_names().len();
        let mut counts = vec![0usize; n_classes];
        for &v in &self.values {
            counts[v] += 1;
        }
        *counts.iter().max().unwrap() as f64 / self.values.len() as f64
    }
}
