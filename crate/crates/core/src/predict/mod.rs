//! Instance-specific predictors of the target given a context.

mod naive_bayes;
mod neighbors;
mod softmax;

pub use naive_bayes::{NaiveBayesModel, NbPrior};
pub use neighbors::{select_by_distance, select_neighbors, NeighborSet, TIE_TOLERANCE};
pub use softmax::{softmax_from_distances, SoftmaxPredictor};

/// Probabilities of target values `[p(0), p(1)]`.
pub type TargetDistribution = [f64; 2];
