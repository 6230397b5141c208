//! Classification-parity auditing for binary classifiers.
//!
//! The crate is organised the way an audit runs:
//!
//! * [`dataset`]: CSV ingestion against a JSON schema, protected-group
//!   partitions, stratified splits, group oversampling, feature ablation and a
//!   synthetic biased-data generator.
//! * [`metrics`]: confusion matrices, ROC/AUC, Youden-optimal thresholds,
//!   Brier score and the group variance statistic.
//! * [`models`]: logistic regression, random forest and gradient-boosted trees,
//!   plus gain-based importance and proxy-feature selection.
//! * [`fairness`]: candidate thresholds, the performance-boundary table,
//!   variance-minimising threshold choice and the pairwise parity check.
//! * [`experiments`]: the ablation / sampling grid and the cross-method
//!   comparison with their delta reporting conventions.

pub mod dataset;
pub mod error;
pub mod experiments;
pub mod fairness;
pub mod metrics;
pub mod models;
pub mod seed;

pub use error::{Error, Result};
