//! Tabular AutoML for pedestrian crash severity analysis.
//!
//! The crate covers the full pipeline: schema-driven CSV ingestion and
//! encoding, SMOTE + Tomek-link resampling, a from-scratch model zoo with
//! cross-validated leaderboards, random-search tuning, Shapley-value
//! explanations (exact, tree-path, and permutation estimators), and
//! deterministic SVG/JSON reporting.
//!
//! Everything downstream of a seed is reproducible: identical
//! configuration and seed produce byte-identical artifacts regardless of
//! thread count.

pub mod automl;
pub mod dataset;
pub mod error;
pub mod explain;
pub mod matrix;
pub mod metrics;
pub mod models;
pub mod report;
pub mod resample;
pub mod stats;
pub mod stream;

pub use error::{Error, Result};
pub use matrix::Matrix;

/// Number of severity categories (minor, serious, fatal).
pub const N_CATEGORIES: usize = 3;
