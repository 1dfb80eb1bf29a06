use nalgebra::DMatrix;

use super::TargetDistribution;
use crate::error::{Error, Result};
use crate::metric::GeneralizedMetric;

/// Non-parametric neighbor model: every reference case votes for its target
/// with weight `exp(-d²(query, case))`, normalized to sum to one.
#[derive(Debug, Clone)]
pub struct SoftmaxPredictor {
    contexts: DMatrix<f64>,
    targets: Vec<u8>,
    metric: GeneralizedMetric,
}

impl SoftmaxPredictor {
    pub fn new(
        contexts: DMatrix<f64>,
        targets: Vec<u8>,
        metric: GeneralizedMetric,
    ) -> Result<Self> {
        if contexts.nrows() == 0 {
            return Err(Error::EmptyReference);
        }
        if contexts.nrows() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: contexts.nrows(),
                actual: targets.len(),
            });
        }
        if contexts.ncols() != metric.dim() {
            return Err(Error::DimensionMismatch {
                expected: metric.dim(),
                actual: contexts.ncols(),
            });
        }
        Ok(Self {
            contexts,
            targets,
            metric,
        })
    }

    pub fn predict(&self, query_context: &[f64]) -> Result<TargetDistribution> {
        let dist = self.metric.distances_to(query_context, &self.contexts)?;
        Ok(softmax_from_distances(&dist, &self.targets))
    }
}

/// Softmax target distribution from squared distances, shifted by the
/// minimum distance so the nearest weight is exactly one.
pub fn softmax_from_distances(distances: &[f64], targets: &[u8]) -> TargetDistribution {
    debug_assert_eq!(distances.len(), targets.len());
    let min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let mut mass = [0.0; 2];
    for (&d, &t) in distances.iter().zip(targets) {
        mass[usize::from(t)] += (-(d - min)).exp();
    }
    let total = mass[0] + mass[1];
    [mass[0] / total, mass[1] / total]
}
