use cad_core::data::{generate_synthetic, Dataset, GroundTruth, SchemaSpec, SyntheticConfig};
use cad_core::detector::{fit_metric, score_case, DetectorConfig, MetricKind, ModelKind, Scope};
use cad_core::eval::{
    partial_auc_norm, roc_curve, run_loo, select_cohort, Cohort, CohortOptions, LooOptions,
    MetricTraining, DEFAULT_MIN_SPECIFICITY,
};
use cad_core::metric::GeneralizedMetric;
use cad_core::predict::{NaiveBayesModel, SoftmaxPredictor};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_db(n: usize, seed: u64) -> (Dataset, GroundTruth) {
    generate_synthetic(&SyntheticConfig::port_like(n, 0.1, seed)).unwrap()
}

fn reference_for(db: &Dataset, i: usize, kind: MetricKind) -> (Dataset, GeneralizedMetric) {
    let rest = db.without(i);
    let metric = fit_metric(
        kind,
        &rest.context_matrix(),
        &rest.targets(),
        &DetectorConfig::new(kind, Scope::Global, ModelKind::Softmax).metric_params,
    )
    .unwrap();
    (rest, metric)
}

#[test]
fn softmax_scaling_limits() {
    let x = DMatrix::from_row_slice(5, 2, &[0.0, 0.0, 0.1, 0.0, 1.0, 1.0, 1.2, 0.9, 2.0, 0.0]);
    let targets = vec![1, 1, 0, 0, 0];
    let query = [0.0, 0.05];

    let sharp = SoftmaxPredictor::new(
        x.clone(),
        targets.clone(),
        GeneralizedMetric::new(DMatrix::identity(2, 2) * 100.0).unwrap(),
    )
    .unwrap();
    // the two nearest cases are both positive
    assert!(sharp.predict(&query).unwrap()[1] > 0.999);

    let flat = SoftmaxPredictor::new(
        x,
        targets,
        GeneralizedMetric::new(DMatrix::identity(2, 2) * 1e-6).unwrap(),
    )
    .unwrap();
    assert!((flat.predict(&query).unwrap()[1] - 0.4).abs() < 1e-6);
}

#[test]
fn mutating_the_scored_row_never_changes_its_score() {
    let (db, _) = small_db(300, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let configs = [
        DetectorConfig::new(MetricKind::Euclidean, Scope::Global, ModelKind::NaiveBayes),
        DetectorConfig::new(
            MetricKind::Mahalanobis,
            Scope::Local(40),
            ModelKind::Softmax,
        ),
        DetectorConfig::new(MetricKind::Rca, Scope::Local(40), ModelKind::NaiveBayes),
    ];
    for i in (0..db.n_cases()).step_by(6).take(50) {
        let id = db.case_ids()[i].clone();
        let case = db.instance(i);
        let noise: Vec<u8> = (0..db.schema().n_attributes())
            .map(|_| rng.random_range(0..2))
            .collect();
        let mutated = db.with_row(i, &noise).unwrap();
        for config in &configs {
            let (rest, metric) = reference_for(&db, i, config.metric_kind);
            let (rest_m, metric_m) = reference_for(&mutated, i, config.metric_kind);
            let a = score_case(&id, &case, &rest, config, &metric).unwrap();
            let b = score_case(&id, &case, &rest_m, config, &metric_m).unwrap();
            assert_eq!(a.posterior.to_bits(), b.posterior.to_bits(), "case {id}");
        }
    }
}

#[test]
fn scoring_against_a_database_containing_the_case_is_refused() {
    let (db, _) = small_db(120, 2);
    let config = DetectorConfig::new(MetricKind::Euclidean, Scope::Global, ModelKind::Softmax);
    let id = &db.case_ids()[3];
    let err = score_case(
        id,
        &db.instance(3),
        &db,
        &config,
        &GeneralizedMetric::euclidean(19),
    );
    assert!(err.is_err());
}

#[test]
fn global_naive_bayes_matches_plain_model_on_rest() {
    let (db, _) = small_db(200, 4);
    let config = DetectorConfig::new(MetricKind::Euclidean, Scope::Global, ModelKind::NaiveBayes);
    for i in [0, 17, 133] {
        let rest = db.without(i);
        let s = score_case(
            &db.case_ids()[i],
            &db.instance(i),
            &rest,
            &config,
            &GeneralizedMetric::euclidean(19),
        )
        .unwrap();
        let ctx: Vec<u8> = db
            .schema()
            .context_indices()
            .iter()
            .map(|&c| db.row(i)[c])
            .collect();
        let p = NaiveBayesModel::fit(&rest, config.nb_prior)
            .predict(&ctx)
            .unwrap();
        assert_eq!(s.posterior, p[usize::from(db.target(i))]);
        assert_eq!(s.n_reference, 199);
    }
}

#[test]
fn lowering_the_threshold_never_adds_flags() {
    let (db, _) = small_db(150, 8);
    let thresholds = [0.5, 0.2, 0.05, 0.01, 0.001];
    let mut config =
        DetectorConfig::new(MetricKind::Euclidean, Scope::Local(40), ModelKind::Softmax);
    let metric = GeneralizedMetric::euclidean(19);
    for i in 0..db.n_cases() {
        let rest = db.without(i);
        let mut prev = true;
        for &t in &thresholds {
            config.threshold = t;
            let flagged = score_case(&db.case_ids()[i], &db.instance(i), &rest, &config, &metric)
                .unwrap()
                .is_anomaly;
            assert!(prev || !flagged);
            prev = flagged;
        }
    }
}

#[test]
fn local_scope_covering_the_database_equals_global() {
    let (db, _) = small_db(60, 5);
    let metric = GeneralizedMetric::euclidean(19);
    for model in [ModelKind::Softmax, ModelKind::NaiveBayes] {
        let global = DetectorConfig::new(MetricKind::Euclidean, Scope::Global, model);
        let local = DetectorConfig::new(MetricKind::Euclidean, Scope::Local(500), model);
        for i in 0..db.n_cases() {
            let rest = db.without(i);
            let id = &db.case_ids()[i];
            let g = score_case(id, &db.instance(i), &rest, &global, &metric).unwrap();
            let l = score_case(id, &db.instance(i), &rest, &local, &metric).unwrap();
            assert!((g.posterior - l.posterior).abs() < 1e-12);
            assert_eq!(l.n_reference, 59);
        }
    }
}

#[test]
fn random_scores_average_the_diagonal_baseline() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let trials = 1000;
    let mut total = 0.0;
    for _ in 0..trials {
        // large enough that the half-step bias of the empirical curve is negligible
        let mut labels = vec![false; 900];
        labels.extend(vec![true; 100]);
        let scores: Vec<(f64, bool)> = labels
            .into_iter()
            .map(|l| (rng.random::<f64>(), l))
            .collect();
        total += partial_auc_norm(&roc_curve(&scores).unwrap(), DEFAULT_MIN_SPECIFICITY);
    }
    let mean = total / trials as f64;
    assert!((2.0..=3.0).contains(&mean), "mean {mean}");
}

#[test]
fn shuffled_labels_erase_the_learned_metric_advantage() {
    let grid = [
        DetectorConfig::new(MetricKind::Nca, Scope::Global, ModelKind::Softmax),
        DetectorConfig::new(MetricKind::Euclidean, Scope::Global, ModelKind::Softmax),
    ];
    let opts = LooOptions {
        metric_training: MetricTraining::Once,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut diffs = Vec::new();
    for seed in 0..3 {
        let (db, truth) = small_db(700, seed);
        let cohort = select_cohort(
            &db,
            &truth,
            &CohortOptions {
                seed,
                ..CohortOptions::default()
            },
        )
        .unwrap();
        let results = run_loo(&db, &cohort, &grid, &opts).unwrap();
        let (nca, euc) = (results[0].scores(), results[1].scores());
        let mut labels = cohort.labels.clone();
        for _ in 0..300 {
            labels.shuffle(&mut rng);
            let pauc = |s: &[(f64, bool)]| {
                let s: Vec<(f64, bool)> =
                    s.iter().zip(&labels).map(|(&(p, _), &l)| (p, l)).collect();
                partial_auc_norm(&roc_curve(&s).unwrap(), DEFAULT_MIN_SPECIFICITY)
            };
            diffs.push(pauc(&nca) - pauc(&euc));
        }
    }
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    assert!(mean.abs() < 1.0, "mean difference {mean}");
}

#[test]
fn loo_results_follow_grid_and_cohort_order() {
    let (db, truth) = small_db(150, 3);
    let ids: Vec<String> = db.case_ids()[..10].to_vec();
    let cohort = Cohort::from_ids(ids.clone(), &truth).unwrap();
    let grid = [
        DetectorConfig::new(MetricKind::Rca, Scope::Local(20), ModelKind::NaiveBayes),
        DetectorConfig::new(MetricKind::Mahalanobis, Scope::Global, ModelKind::Softmax),
    ];
    for mode in [
        MetricTraining::PerCase,
        MetricTraining::Once,
        MetricTraining::CohortOnly,
    ] {
        let results = run_loo(
            &db,
            &cohort,
            &grid,
            &LooOptions {
                metric_training: mode,
            },
        )
        .unwrap();
        assert_eq!(results.len(), 2);
        for (r, c) in results.iter().zip(&grid) {
            assert_eq!(&r.config, c);
            let got: Vec<&String> = r.records.iter().map(|x| &x.case_id).collect();
            assert_eq!(got, ids.iter().collect::<Vec<_>>());
            assert!(r.records.iter().all(|x| x.n_reference <= 149));
        }
    }
}

#[test]
fn generator_is_deterministic_per_seed() {
    let render = |seed| {
        let (db, _) = small_db(100, seed);
        let mut buf = Vec::new();
        db.write_csv_to(&mut buf).unwrap();
        buf
    };
    assert_eq!(render(42), render(42));
    assert_ne!(render(42), render(43));
}

#[test]
fn truth_file_round_trips() {
    let (_, truth) = small_db(80, 6);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("truth.csv");
    truth.write_csv(&path).unwrap();
    assert_eq!(GroundTruth::load_csv(&path).unwrap(), truth);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dataset_csv_round_trips(rows in prop::collection::vec(prop::collection::vec(0u8..2, 4), 1..30)) {
        let names: Vec<String> = ["a", "b", "c", "t"].iter().map(|s| s.to_string()).collect();
        let ids: Vec<String> = (0..rows.len()).map(|i| format!("r{i}")).collect();
        let schema = cad_core::data::AttributeSchema::with_target(names, "t").unwrap();
        let db = Dataset::new(schema, rows, ids).unwrap();
        let mut buf = Vec::new();
        db.write_csv_to(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice(), &SchemaSpec::target("t")).unwrap();
        prop_assert_eq!(back.case_ids(), db.case_ids());
        for i in 0..db.n_cases() {
            prop_assert_eq!(back.row(i), db.row(i));
        }
    }
}
