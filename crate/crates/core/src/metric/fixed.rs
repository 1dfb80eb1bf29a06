use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::linalg::{inverse_sqrt, population_covariance};
use super::GeneralizedMetric;
use crate::error::{Error, Result};

/// `1e-6 · trace(S) / d`, the default ridge for covariance-based metrics.
pub fn default_ridge(cov: &DMatrix<f64>) -> f64 {
    let d = cov.nrows().max(1);
    1e-6 * cov.trace() / d as f64
}

/// Mahalanobis metric: `Q = (Σ̂ + λI)⁻¹` with `A` its symmetric square root.
pub fn fit_mahalanobis(x: &DMatrix<f64>, ridge: f64) -> Result<GeneralizedMetric> {
    if x.nrows() < 2 {
        return Err(Error::TooFewCases {
            needed: 2,
            actual: x.nrows(),
        });
    }
    let cov = population_covariance(x);
    GeneralizedMetric::new(inverse_sqrt(&cov, ridge)?)
}

/// How within-class covariances are combined in RCA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RcaWeighting {
    /// `Σ (n_i / n) Σ̂_i`
    #[default]
    ClassSize,
    /// `Σ Σ̂_i`
    Unweighted,
}

/// Relevant component analysis: whitens the pooled within-class covariance,
/// `A = (Σ_RCA + λI)^(-1/2)`.
pub fn fit_rca(
    x: &DMatrix<f64>,
    labels: &[u8],
    ridge: f64,
    weighting: RcaWeighting,
) -> Result<GeneralizedMetric> {
    let n = x.nrows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len(),
        });
    }
    if n == 0 {
        return Err(Error::TooFewCases {
            needed: 1,
            actual: 0,
        });
    }
    let mut classes: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        classes.entry(l).or_default().push(i);
    }
    let d = x.ncols();
    let mut pooled = DMatrix::zeros(d, d);
    for members in classes.values() {
        let rows = x.select_rows(members);
        let cov = population_covariance(&rows);
        let w = match weighting {
            RcaWeighting::ClassSize => members.len() as f64 / n as f64,
            RcaWeighting::Unweighted => 1.0,
        };
        pooled += cov * w;
    }
    GeneralizedMetric::new(inverse_sqrt(&pooled, ridge)?)
}
