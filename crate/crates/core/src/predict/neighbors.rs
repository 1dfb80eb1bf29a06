use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metric::GeneralizedMetric;

/// Absolute tolerance on squared distances when expanding ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Nearest reference cases, ascending by squared distance.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
}

impl NeighborSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// The `k` smallest of `distances`, plus every case tied with the k-th.
///
/// Equal distances are ordered by index, so the result is deterministic.
pub fn select_by_distance(distances: &[f64], k: usize) -> Result<NeighborSet> {
    if distances.is_empty() {
        return Err(Error::EmptyReference);
    }
    if k == 0 {
        return Err(Error::InvalidConfig(
            "neighborhood size k must be at least 1".into(),
        ));
    }
    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(a.cmp(&b)));
    let mut take = k.min(order.len());
    let cutoff = distances[order[take - 1]] + TIE_TOLERANCE;
    while take < order.len() && distances[order[take]] <= cutoff {
        take += 1;
    }
    order.truncate(take);
    let distances = order.iter().map(|&i| distances[i]).collect();
    Ok(NeighborSet {
        indices: order,
        distances,
    })
}

/// Nearest cases of `reference` to a context vector under `metric`.
pub fn select_neighbors(
    metric: &GeneralizedMetric,
    query_context: &[f64],
    reference: &Dataset,
    k: usize,
) -> Result<NeighborSet> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let distances = metric.distances_to(query_context, &reference.context_matrix())?;
    select_by_distance(&distances, k)
}
