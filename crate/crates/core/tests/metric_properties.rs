use cad_core::metric::{
    fit_mahalanobis, fit_nca, fit_rca, nca_gradient, nca_objective, population_covariance,
    GeneralizedMetric, NcaOptions, RcaWeighting,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * (rng.random::<f64>() * 2.0 - 1.0))
}

/// Central differences of the objective, one entry of A at a time.
fn finite_difference(a: &DMatrix<f64>, x: &DMatrix<f64>, labels: &[u8], h: f64) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for r in 0..a.nrows() {
        for c in 0..a.ncols() {
            let mut plus = a.clone();
            plus[(r, c)] += h;
            let mut minus = a.clone();
            minus[(r, c)] -= h;
            out[(r, c)] = (nca_objective(&plus, x, labels).unwrap()
                - nca_objective(&minus, x, labels).unwrap())
                / (2.0 * h);
        }
    }
    out
}

fn relative_error(got: &DMatrix<f64>, want: &DMatrix<f64>) -> f64 {
    (got - want).amax() / want.amax().max(1e-8)
}

fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    random_matrix(rng, d, d, 1.0).qr().q()
}

#[test]
fn gradient_matches_finite_differences_on_ten_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let x = random_matrix(&mut rng, 10, 5, 1.0);
    let labels: Vec<u8> = (0..10).map(|i| (i % 3 == 0) as u8).collect();
    let a = random_matrix(&mut rng, 5, 5, 0.7);
    let g = nca_gradient(&a, &x, &labels).unwrap();
    let fd = finite_difference(&a, &x, &labels, 1e-5);
    assert!(relative_error(&g, &fd) < 1e-5);
}

#[test]
fn all_same_label_objective_is_n() {
    // rows of p_ij sum to one
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [2, 5, 11] {
        let x = random_matrix(&mut rng, n, 3, 2.0);
        let a = random_matrix(&mut rng, 3, 3, 1.0);
        let g = nca_objective(&a, &x, &vec![1; n]).unwrap();
        assert!((g - n as f64).abs() < 1e-9);
    }
}

#[test]
fn nca_down_weights_noise_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 60;
    let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let x = DMatrix::from_fn(n, 2, |i, j| {
        if j == 0 {
            3.0 * f64::from(labels[i]) + 0.3 * (rng.random::<f64>() - 0.5)
        } else {
            2.0 * (rng.random::<f64>() - 0.5)
        }
    });
    for regularization in [0.0, 0.01] {
        let opts = NcaOptions {
            regularization,
            ..NcaOptions::default()
        };
        let fit = fit_nca(&x, &labels, &opts).unwrap();
        let q = fit.metric.weight_matrix();
        assert!(
            q[(1, 1)] / q[(0, 0)] < 1.0,
            "ratio {}",
            q[(1, 1)] / q[(0, 0)]
        );
        assert!(fit.objective_trace.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn unregularized_fit_never_lowers_g() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random_matrix(&mut rng, 30, 4, 1.0);
    let labels: Vec<u8> = (0..30).map(|_| rng.random_range(0..2)).collect();
    let opts = NcaOptions {
        regularization: 0.0,
        max_iterations: 50,
        ..NcaOptions::default()
    };
    let fit = fit_nca(&x, &labels, &opts).unwrap();
    let before = nca_objective(&DMatrix::identity(4, 4), &x, &labels).unwrap();
    let after = nca_objective(fit.metric.transform(), &x, &labels).unwrap();
    assert!(after >= before);
    assert_eq!(fit.objective_trace[0], before);
    assert_eq!(*fit.objective_trace.last().unwrap(), after);
}

#[test]
fn rca_whitens_pooled_within_class_covariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 40;
    let x = random_matrix(&mut rng, n, 3, 1.0) * random_matrix(&mut rng, 3, 3, 1.5);
    let labels: Vec<u8> = (0..n).map(|i| (i % 3 == 0) as u8).collect();
    let m = fit_rca(&x, &labels, 0.0, RcaWeighting::ClassSize).unwrap();
    let y = m.project_rows(&x);
    let mut pooled = DMatrix::zeros(3, 3);
    for class in [0u8, 1] {
        let rows: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        pooled += population_covariance(&y.select_rows(&rows)) * (rows.len() as f64 / n as f64);
    }
    assert!((pooled - DMatrix::<f64>::identity(3, 3)).amax() < 1e-6);
}

#[test]
fn mahalanobis_on_identity_covariance_equals_euclidean() {
    let d = 3;
    let s = (d as f64).sqrt();
    let x = DMatrix::from_fn(2 * d, d, |r, c| {
        if r % d == c {
            if r < d {
                s
            } else {
                -s
            }
        } else {
            0.0
        }
    });
    let m = fit_mahalanobis(&x, 0.0).unwrap();
    let e = GeneralizedMetric::euclidean(d);
    let u = [0.3, -1.0, 2.0];
    let v = [1.0, 0.5, 0.0];
    let dm = m.distance_sq(&u, &v).unwrap();
    let de = e.distance_sq(&u, &v).unwrap();
    assert!((dm - de).abs() < 1e-12, "{dm} vs {de}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), n in 2usize..=12, d in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_matrix(&mut rng, n, d, 1.0);
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let a = random_matrix(&mut rng, d, d, 0.8);
        let g = nca_gradient(&a, &x, &labels).unwrap();
        let fd = finite_difference(&a, &x, &labels, 1e-5);
        prop_assert!(relative_error(&g, &fd) < 1e-5, "rel err {}", relative_error(&g, &fd));
    }

    #[test]
    fn objective_is_rotation_invariant(seed in any::<u64>(), n in 2usize..=12, d in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_matrix(&mut rng, n, d, 1.0);
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let a = random_matrix(&mut rng, d, d, 1.0);
        let r = random_orthogonal(&mut rng, d);
        let g = nca_objective(&a, &x, &labels).unwrap();
        let gr = nca_objective(&(r * &a), &x, &labels).unwrap();
        prop_assert!((g - gr).abs() < 1e-9);
        prop_assert!((0.0..=n as f64).contains(&g));
    }

    #[test]
    fn fitted_metrics_are_pseudometrics(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 25;
        let x = DMatrix::from_fn(n, 4, |_, _| f64::from(rng.random_range(0..2u8)));
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let opts = NcaOptions { max_iterations: 10, ..NcaOptions::default() };
        let metrics = [
            fit_mahalanobis(&x, 1e-3).unwrap(),
            fit_rca(&x, &labels, 1e-3, RcaWeighting::ClassSize).unwrap(),
            fit_nca(&x, &labels, &opts).unwrap().metric,
        ];
        for m in &metrics {
            for _ in 0..10 {
                let p: Vec<Vec<f64>> = (0..3)
                    .map(|_| (0..4).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect())
                    .collect();
                let d = |a: &[f64], b: &[f64]| m.distance_sq(a, b).unwrap();
                prop_assert_eq!(d(&p[0], &p[0]), 0.0);
                prop_assert!((d(&p[0], &p[1]) - d(&p[1], &p[0])).abs() < 1e-12);
                let (ab, bc, ac) = (d(&p[0], &p[1]).sqrt(), d(&p[1], &p[2]).sqrt(), d(&p[0], &p[2]).sqrt());
                prop_assert!(ac <= ab + bc + 1e-9);
            }
        }
    }
}
