//! Conditional anomaly detection for binary tabular data.
//!
//! A case is split into context attributes and a single binary target. The
//! detector builds a predictive model of the target from other cases (either
//! globally or from the nearest neighbors under a learned metric) and flags
//! the case when the probability of its observed target value is small.
//!
//! Modules, bottom-up:
//!
//! - [`data`]: schema, dataset and CSV I/O, plus a seeded synthetic generator.
//! - [`metric`]: generalized quadratic metrics (Euclidean, Mahalanobis, RCA, NCA).
//! - [`predict`]: neighbor selection, the softmax neighbor model and Bayesian naive Bayes.
//! - [`detector`]: per-case scoring and the absolute threshold test.
//! - [`eval`]: cohort selection, leave-one-out runs, ROC / partial AUC and reports.

pub mod data;
pub mod detector;
pub mod error;
pub mod eval;
pub mod metric;
pub mod predict;

pub use error::{Error, Result};
