//! End-to-end chronic-disease screening over daily behavioral data.
//!
//! The pipeline runs in stages: generate (or ingest) a cohort of
//! participants with daily uploads, clean out unreliable uploaders,
//! summarize each participant into a 35-attribute feature row, fill
//! missing cells by mean or k-nearest-neighbor imputation, train one of
//! four from-scratch classifiers per disease, score everything with
//! nested stratified cross-validation against an expert blood-pressure
//! rule, and attribute predictions to features with Shapley values.

pub mod cleaning;
pub mod domain;
pub mod error;
pub mod eval;
pub mod explain;
pub mod features;
pub mod impute;
pub mod learners;
pub mod synthgen;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
