use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Population covariance (divides by n) of the rows of `x`.
pub fn population_covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let d = x.ncols();
    if n == 0 {
        return DMatrix::zeros(d, d);
    }
    let mean = x.row_mean();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    (centered.transpose() * &centered) / n as f64
}

/// Symmetric `(S + ridge·I)^(-1/2)` for a symmetric PSD `S`.
///
/// Eigenvalues are clamped at zero before the ridge is added. With a zero
/// ridge, a (numerically) singular `S` is an error.
pub(crate) fn inverse_sqrt(s: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    let d = s.nrows();
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max_eig = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let floor = 1e-12 * max_eig.max(f64::MIN_POSITIVE);
    let mut scale = Vec::with_capacity(d);
    for &e in eig.eigenvalues.iter() {
        let shifted = e.max(0.0) + ridge;
        if ridge <= 0.0 && e <= floor {
            return Err(Error::SingularCovariance);
        }
        scale.push(1.0 / shifted.sqrt());
    }
    let v = &eig.eigenvectors;
    let mut out = DMatrix::zeros(d, d);
    for (k, s) in scale.iter().enumerate() {
        let col = v.column(k);
        out += (col * col.transpose()) * *s;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_sqrt_of_diagonal() {
        let s = DMatrix::from_diagonal(&nalgebra::dvector![4.0, 1.0, 0.25]);
        let a = inverse_sqrt(&s, 0.0).unwrap();
        let expected = DMatrix::from_diagonal(&nalgebra::dvector![0.5, 1.0, 2.0]);
        assert!((a - expected).amax() < 1e-12);
    }

    #[test]
    fn singular_needs_ridge() {
        let s = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 0.0]);
        assert!(matches!(
            inverse_sqrt(&s, 0.0),
            Err(Error::SingularCovariance)
        ));
        let a = inverse_sqrt(&s, 1e-6).unwrap();
        assert!(a.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn covariance_of_known_rows() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 4.0]);
        let c = population_covariance(&x);
        assert_eq!(c, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
    }
}
