//! Error type shared across the pipeline stages.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cohort too small: {0}")]
    CohortTooSmall(String),

    #[error("column '{0}' has no observed values to impute from")]
    FullyMissingColumn(String),

    #[error("anchor column '{0}' contains missing values")]
    MissingAnchor(String),

    #[error("unseen category '{value}' in column '{column}'")]
    UnseenCategory { column: String, value: String },

    #[error("matrix contains missing cells; impute before encoding or training")]
    MissingCells,

    #[error("labels contain a single class; at least two are required")]
    SingleClass,

    #[error("length mismatch: {left} vs {right} ({context})")]
    LengthMismatch {
        left: usize,
        right: usize,
        context: &'static str,
    },

    #[error("feature schema fingerprint mismatch: model was trained on {expected}, got {actual}")]
    SchemaMismatch { expected: String, actual: String },

    #[error("class '{0}' has {1} members, fewer than the {2} folds requested")]
    ClassTooSmallForFolds(String, usize, usize),

    #[error("{n_features} features exceed the exact-enumeration cap of {max}; use sampling")]
    TooManyFeatures { n_features: usize, max: usize },

    #[error("background set is empty")]
    EmptyBackground,

    #[error("{0}")]
    InvalidInput(String),
}
