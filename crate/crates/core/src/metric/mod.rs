//! Generalized quadratic metrics `d²(u, v) = ‖A(u − v)‖² = (u − v)ᵀ AᵀA (u − v)`.
//!
//! Fixed metrics (Euclidean, Mahalanobis) and learned ones (RCA, NCA) all
//! reduce to a square transform `A` over context vectors.

mod fixed;
mod linalg;
pub mod nca;

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;

pub use fixed::{default_ridge, fit_mahalanobis, fit_rca, RcaWeighting};
pub use linalg::population_covariance;
pub use nca::{fit_nca, nca_gradient, nca_objective, NcaFit, NcaOptions};

use crate::error::{Error, Result};

/// A pseudometric given by a linear transform `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedMetric {
    transform: DMatrix<f64>,
}

impl GeneralizedMetric {
    pub fn new(transform: DMatrix<f64>) -> Result<Self> {
        if !transform.is_square() {
            return Err(Error::DimensionMismatch {
                expected: transform.nrows(),
                actual: transform.ncols(),
            });
        }
        Ok(Self { transform })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self {
            transform: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.transform.ncols()
    }

    pub fn transform(&self) -> &DMatrix<f64> {
        &self.transform
    }

    /// `Q = AᵀA`.
    pub fn weight_matrix(&self) -> DMatrix<f64> {
        self.transform.transpose() * &self.transform
    }

    pub fn distance_sq(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let d = self.dim();
        for len in [u.len(), v.len()] {
            if len != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: len,
                });
            }
        }
        let a = &self.transform;
        let mut total = 0.0;
        for r in 0..d {
            let mut acc = 0.0;
            for c in 0..d {
                acc += a[(r, c)] * (u[c] - v[c]);
            }
            total += acc * acc;
        }
        Ok(total)
    }

    /// Rows of `x` mapped through `A` (returns `x Aᵀ`).
    pub fn project_rows(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x * self.transform.transpose()
    }

    /// Squared distances from `query` to every row of `x`.
    pub fn distances_to(&self, query: &[f64], x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let d = self.dim();
        for len in [query.len(), x.ncols()] {
            if len != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: len,
                });
            }
        }
        let q = &self.transform * nalgebra::DVector::from_column_slice(query);
        let projected = self.project_rows(x);
        Ok(projected
            .row_iter()
            .map(|row| {
                row.iter()
                    .zip(q.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum()
            })
            .collect())
    }

    /// Plain-text form: the dimension on the first line, then one row of `A`
    /// per line with 17 significant digits.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let d = self.dim();
        writeln!(w, "{d}")?;
        for r in 0..d {
            let row: Vec<String> = (0..d)
                .map(|c| format!("{:.16e}", self.transform[(r, c)]))
                .collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut tokens = Vec::new();
        for line in r.lines() {
            let line = line.map_err(|e| Error::io("<metric>", e))?;
            tokens.extend(line.split_whitespace().map(str::to_string));
        }
        let mut it = tokens.into_iter();
        let d: usize = it
            .next()
            .ok_or_else(|| Error::MetricFormat("empty file".into()))?
            .parse()
            .map_err(|_| Error::MetricFormat("first token must be the dimension".into()))?;
        let values: Vec<f64> = it
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::MetricFormat(format!("bad number `{t}`")))
            })
            .collect::<Result<_>>()?;
        if values.len() != d * d {
            return Err(Error::MetricFormat(format!(
                "expected {} entries, found {}",
                d * d,
                values.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(d, d, &values))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(file))
    }
}
