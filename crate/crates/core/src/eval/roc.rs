use crate::error::{Error, Result};

pub const DEFAULT_MIN_SPECIFICITY: f64 = 0.95;

/// ROC points `(fpr, tpr)` from `(0, 0)` to `(1, 1)`, one point per
/// distinct score value.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
}

/// ROC of `(posterior, is_anomaly)` pairs where a lower posterior is more
/// anomalous. Cases with equal posteriors enter the curve together.
pub fn roc_curve(scores: &[(f64, bool)]) -> Result<RocCurve> {
    let positives = scores.iter().filter(|s| s.1).count();
    let negatives = scores.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let value = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == value {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
    }
    Ok(RocCurve { points })
}

/// Area under the curve over `fpr ∈ [0, 1 − min_specificity]` divided by
/// the width of that interval, in percent. A random scorer gets
/// `50 · (1 − min_specificity)` (2.5 at 95%) and a perfect one 100.
pub fn partial_auc_norm(curve: &RocCurve, min_specificity: f64) -> f64 {
    let limit = 1.0 - min_specificity;
    if limit <= 0.0 {
        return 0.0;
    }
    let mut area = 0.0;
    for w in curve.points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x0 >= limit {
            break;
        }
        if x1 <= limit {
            area += (x1 - x0) * (y0 + y1) / 2.0;
        } else {
            let y_at = y0 + (y1 - y0) * (limit - x0) / (x1 - x0);
            area += (limit - x0) * (y0 + y_at) / 2.0;
            break;
        }
    }
    (100.0 * area / limit).clamp(0.0, 100.0)
}
