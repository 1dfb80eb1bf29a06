//! Neighborhood components analysis.
//!
//! Each case `i` picks a neighbor `j ≠ i` with softmax probability
//! `p_ij ∝ exp(-‖Ax_i − Ax_j‖²)`. The objective `g(A) = Σ_i Σ_{j ∈ C_i} p_ij`
//! is the expected number of cases whose picked neighbor shares their class.
//!
//! Internally, identical (context, label) rows are merged into weighted
//! patterns. The objective and gradient are computed exactly over pattern
//! pairs, which makes binary data with many duplicate contexts much cheaper.

use std::collections::HashMap;

use nalgebra::DMatrix;

use super::GeneralizedMetric;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NcaOptions {
    pub max_iterations: usize,
    /// Starting transform; identity when `None`.
    pub initial: Option<DMatrix<f64>>,
    /// First step length, applied to the gradient of the mean objective `g / n`.
    pub initial_step: f64,
    /// Step multiplier after an accepted iteration.
    pub step_growth: f64,
    /// Line search gives up below this step length.
    pub min_step: f64,
    /// Stop once an accepted step improves `g / n` by less than this.
    pub tolerance: f64,
    /// Per-case weight of the Frobenius penalty: the maximized criterion is
    /// `g(A) − regularization · n · ‖A‖²_F` (0 disables it).
    pub regularization: f64,
}

impl Default for NcaOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            initial: None,
            initial_step: 1.0,
            step_growth: 1.5,
            min_step: 1e-10,
            tolerance: 1e-6,
            regularization: 0.01,
        }
    }
}

impl NcaOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("nca: {m}")));
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1");
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return bad("tolerance must be positive");
        }
        if !(self.initial_step > 0.0 && self.min_step > 0.0 && self.step_growth >= 1.0) {
            return bad("step parameters must be positive, growth >= 1");
        }
        if self.regularization.is_nan() || self.regularization < 0.0 {
            return bad("regularization must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NcaFit {
    pub metric: GeneralizedMetric,
    /// Maximized criterion `g(A) − regularization · n · ‖A‖²_F` at the
    /// initial and every accepted iterate.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

/// Distinct rows with multiplicities.
struct Patterns {
    dim: usize,
    // row-major, n_patterns × dim
    points: Vec<f64>,
    labels: Vec<u8>,
    counts: Vec<f64>,
    n_cases: usize,
}

impl Patterns {
    fn new(x: &DMatrix<f64>, labels: &[u8]) -> Self {
        let (n, d) = x.shape();
        let mut index: HashMap<(Vec<u64>, u8), usize> = HashMap::new();
        let mut points = Vec::new();
        let mut pattern_labels = Vec::new();
        let mut counts: Vec<f64> = Vec::new();
        for i in 0..n {
            let row: Vec<f64> = (0..d).map(|j| x[(i, j)]).collect();
            let key = (row.iter().map(|v| v.to_bits()).collect(), labels[i]);
            match index.get(&key) {
                Some(&p) => counts[p] += 1.0,
                None => {
                    index.insert(key, counts.len());
                    points.extend_from_slice(&row);
                    pattern_labels.push(labels[i]);
                    counts.push(1.0);
                }
            }
        }
        Self {
            dim: d,
            points,
            labels: pattern_labels,
            counts,
            n_cases: n,
        }
    }

    fn len(&self) -> usize {
        self.counts.len()
    }

    fn point(&self, u: usize) -> &[f64] {
        &self.points[u * self.dim..(u + 1) * self.dim]
    }

    /// Objective, and optionally its gradient with respect to `A`.
    fn evaluate(&self, a: &DMatrix<f64>, with_gradient: bool) -> (f64, Option<DMatrix<f64>>) {
        let d = self.dim;
        let m = self.len();
        let out_dim = a.nrows();

        let mut projected = vec![0.0; m * out_dim];
        for u in 0..m {
            let x = self.point(u);
            for r in 0..out_dim {
                projected[u * out_dim + r] = (0..d).map(|c| a[(r, c)] * x[c]).sum();
            }
        }

        let mut objective = 0.0;
        let mut dist = vec![0.0; m];
        let mut weight = vec![0.0; m];
        // Σ_uv W_uv x_uv x_uvᵀ, accumulated as
        // Σ_u (r_u x_u x_uᵀ − x_u s_uᵀ − s_u x_uᵀ) + Σ_v c_v x_v x_vᵀ
        let mut scatter = vec![0.0; if with_gradient { d * d } else { 0 }];
        let mut col_sums = vec![0.0; if with_gradient { m } else { 0 }];
        let mut s = vec![0.0; d];

        for u in 0..m {
            let yu = &projected[u * out_dim..(u + 1) * out_dim];
            let mut shift = f64::INFINITY;
            for v in 0..m {
                let yv = &projected[v * out_dim..(v + 1) * out_dim];
                let dsq: f64 = yu.iter().zip(yv).map(|(p, q)| (p - q) * (p - q)).sum();
                dist[v] = dsq;
                if self.others(u, v) > 0.0 && dsq < shift {
                    shift = dsq;
                }
            }
            let mut denom = 0.0;
            let mut same = 0.0;
            for v in 0..m {
                let c = self.others(u, v);
                weight[v] = if c > 0.0 {
                    c * (-(dist[v] - shift)).exp()
                } else {
                    0.0
                };
                denom += weight[v];
                if self.labels[v] == self.labels[u] {
                    same += weight[v];
                }
            }
            let p_u = same / denom;
            let mu = self.counts[u];
            objective += mu * p_u;

            if with_gradient {
                let xu = self.point(u);
                let mut row_sum = 0.0;
                s.iter_mut().for_each(|v| *v = 0.0);
                for v in 0..m {
                    if weight[v] == 0.0 {
                        continue;
                    }
                    let indicator = if self.labels[v] == self.labels[u] {
                        1.0
                    } else {
                        0.0
                    };
                    let w = mu * weight[v] / denom * (p_u - indicator);
                    row_sum += w;
                    col_sums[v] += w;
                    for (sk, xk) in s.iter_mut().zip(self.point(v)) {
                        *sk += w * xk;
                    }
                }
                for r in 0..d {
                    for c in 0..d {
                        scatter[r * d + c] += row_sum * xu[r] * xu[c] - xu[r] * s[c] - s[r] * xu[c];
                    }
                }
            }
        }

        let gradient = with_gradient.then(|| {
            for (v, &weight) in col_sums.iter().enumerate().take(m) {
                let xv = self.point(v);
                for r in 0..d {
                    for c in 0..d {
                        scatter[r * d + c] += weight * xv[r] * xv[c];
                    }
                }
            }
            let scatter = DMatrix::from_row_slice(d, d, &scatter);
            a * scatter * 2.0
        });
        (objective, gradient)
    }

    /// Number of cases in pattern `v` that case `i ∈ u` may pick.
    #[inline]
    fn others(&self, u: usize, v: usize) -> f64 {
        if u == v {
            self.counts[v] - 1.0
        } else {
            self.counts[v]
        }
    }
}

fn check_inputs(a: &DMatrix<f64>, x: &DMatrix<f64>, labels: &[u8]) -> Result<()> {
    if labels.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: labels.len(),
        });
    }
    if a.ncols() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            actual: a.ncols(),
        });
    }
    if x.nrows() < 2 {
        return Err(Error::TooFewCases {
            needed: 2,
            actual: x.nrows(),
        });
    }
    Ok(())
}

/// `g(A)`: expected number of cases whose softmax-picked neighbor shares their label.
pub fn nca_objective(a: &DMatrix<f64>, x: &DMatrix<f64>, labels: &[u8]) -> Result<f64> {
    check_inputs(a, x, labels)?;
    Ok(Patterns::new(x, labels).evaluate(a, false).0)
}

/// `∂g/∂A = 2A Σ_i (p_i Σ_k p_ik x_ik x_ikᵀ − Σ_{j∈C_i} p_ij x_ij x_ijᵀ)` with
/// `p_i = Σ_{j∈C_i} p_ij`.
pub fn nca_gradient(a: &DMatrix<f64>, x: &DMatrix<f64>, labels: &[u8]) -> Result<DMatrix<f64>> {
    check_inputs(a, x, labels)?;
    Ok(Patterns::new(x, labels)
        .evaluate(a, true)
        .1
        .expect("gradient requested"))
}

/// Gradient ascent on `g(A)` with a backtracking line search.
///
/// A trial step is accepted only if the criterion does not decrease; the step
/// is halved until that holds. Degenerate inputs (fewer than two cases or a
/// single class) return the initial transform.
pub fn fit_nca(x: &DMatrix<f64>, labels: &[u8], opts: &NcaOptions) -> Result<NcaFit> {
    opts.validate()?;
    let d = x.ncols();
    let initial = opts
        .initial
        .clone()
        .unwrap_or_else(|| DMatrix::identity(d, d));
    if labels.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: labels.len(),
        });
    }
    if initial.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: initial.ncols(),
        });
    }
    let both_classes = labels.contains(&0) && labels.contains(&1);
    if x.nrows() < 2 || !both_classes {
        return Ok(NcaFit {
            metric: GeneralizedMetric::new(initial)?,
            objective_trace: Vec::new(),
            iterations: 0,
        });
    }

    let patterns = Patterns::new(x, labels);
    let n = patterns.n_cases as f64;
    let reg = opts.regularization * n;
    let evaluate = |a: &DMatrix<f64>| {
        let (g, grad) = patterns.evaluate(a, true);
        let grad = grad.expect("gradient requested");
        if reg > 0.0 {
            (g - reg * a.norm_squared(), grad - a * (2.0 * reg))
        } else {
            (g, grad)
        }
    };

    let mut a = initial;
    let (mut value, mut grad) = evaluate(&a);
    let mut trace = vec![value];
    let mut step = opts.initial_step;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let direction = &grad / n;
        if direction.amax() == 0.0 {
            break;
        }
        let mut accepted = None;
        while step >= opts.min_step {
            let trial = &a + &direction * step;
            let (v, g) = evaluate(&trial);
            if v >= value {
                accepted = Some((trial, v, g));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, v, g)) = accepted else { break };
        let improvement = (v - value) / n;
        a = trial;
        value = v;
        grad = g;
        trace.push(value);
        step *= opts.step_growth;
        if improvement < opts.tolerance {
            break;
        }
    }

    Ok(NcaFit {
        metric: GeneralizedMetric::new(a)?,
        objective_trace: trace,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct O(n²) softmax over cases; shares nothing with the pattern code.
    fn brute_objective(a: &DMatrix<f64>, x: &DMatrix<f64>, labels: &[u8]) -> f64 {
        let y = x * a.transpose();
        let n = x.nrows();
        let mut g = 0.0;
        for i in 0..n {
            let w: Vec<f64> = (0..n)
                .map(|k| {
                    if k == i {
                        0.0
                    } else {
                        (-(y.row(i) - y.row(k)).norm_squared()).exp()
                    }
                })
                .collect();
            let total: f64 = w.iter().sum();
            g += (0..n)
                .filter(|&j| j != i && labels[j] == labels[i])
                .map(|j| w[j] / total)
                .sum::<f64>();
        }
        g
    }

    #[test]
    fn two_points_same_class() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 3.0, -2.0]);
        let a = DMatrix::identity(2, 2);
        assert!((nca_objective(&a, &x, &[1, 1]).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(nca_gradient(&a, &x, &[1, 1]).unwrap().amax(), 0.0);
    }

    #[test]
    fn two_points_different_class() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 3.0, -2.0]);
        let a = DMatrix::identity(2, 2);
        assert_eq!(nca_objective(&a, &x, &[0, 1]).unwrap(), 0.0);
        assert_eq!(nca_gradient(&a, &x, &[0, 1]).unwrap().amax(), 0.0);
    }

    #[test]
    fn three_points_on_a_line() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 3.0]);
        let a = DMatrix::identity(1, 1);
        let g = nca_objective(&a, &x, &[1, 1, 0]).unwrap();
        let expected = brute_objective(&a, &x, &[1, 1, 0]);
        // p_01 = 1/(1+e^-8), p_10 = e^-1/(e^-1+e^-4)
        let hand = 1.0 / (1.0 + (-8.0f64).exp()) + 1.0 / (1.0 + (-3.0f64).exp());
        assert!((expected - hand).abs() < 1e-15);
        assert!((g - hand).abs() < 1e-12);
        assert!((g - 1.952).abs() < 5e-4);
    }

    #[test]
    fn duplicates_match_brute_force() {
        let x = DMatrix::from_row_slice(
            6,
            2,
            &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 0.0],
        );
        let labels = [1, 1, 0, 0, 1, 0];
        let a = DMatrix::from_row_slice(2, 2, &[1.3, 0.2, -0.4, 0.7]);
        let g = nca_objective(&a, &x, &labels).unwrap();
        assert!((g - brute_objective(&a, &x, &labels)).abs() < 1e-12);
    }

    #[test]
    fn too_few_cases() {
        let x = DMatrix::from_row_slice(1, 1, &[0.0]);
        let a = DMatrix::identity(1, 1);
        assert!(matches!(
            nca_objective(&a, &x, &[0]),
            Err(Error::TooFewCases { .. })
        ));
        assert!(nca_gradient(&a, &x, &[0]).is_err());
    }

    #[test]
    fn constant_objective_stops_after_one_iteration() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 3.0, -2.0]);
        // single class: returned untouched without iterating
        let fit = fit_nca(&x, &[1, 1], &NcaOptions::default()).unwrap();
        assert_eq!(fit.metric.transform(), &DMatrix::identity(2, 2));
        assert_eq!(fit.iterations, 0);

        // both classes present but every case coincides: g is constant in A
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 0.0, 0.0]);
        let opts = NcaOptions {
            regularization: 0.0,
            ..NcaOptions::default()
        };
        let fit = fit_nca(&x, &[1, 1, 0], &opts).unwrap();
        assert_eq!(fit.iterations, 1);
        assert_eq!(fit.metric.transform(), &DMatrix::identity(1, 1));
    }

    #[test]
    fn options_validated() {
        let o = NcaOptions {
            tolerance: 0.0,
            ..NcaOptions::default()
        };
        assert!(o.validate().is_err());
        let o = NcaOptions {
            max_iterations: 0,
            ..NcaOptions::default()
        };
        assert!(o.validate().is_err());
    }
}
