//! Credit-solvency scoring toolkit.
//!
//! - [`dataset`]: typed CSV loading, label encoding, cleaning, class counts.
//! - [`codebook`]: nominal label to integer code tables.
//! - [`screening`]: logistic Wald tests and Pearson correlation screening.
//! - [`cart`]: Gini CART trees, prediction, model documents, DOT export.
//! - [`eval`]: confusion matrix, error ratios, ROC and AUC.
//! - [`synth`]: seeded synthetic data with a planted decision rule.

pub mod cart;
pub mod codebook;
pub mod dataset;
pub mod eval;
pub mod screening;
pub mod synth;
