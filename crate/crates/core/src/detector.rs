//! Per-case conditional anomaly scoring.
//!
//! For a case `x`, the detector builds an instance-specific model of
//! `p(target | context)` from the other cases (all of them, or the nearest
//! `k` under a metric), evaluates the probability of the observed target
//! value, and calls the case anomalous when that probability is strictly
//! below the threshold.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::data::{project, Dataset, Instance};
use crate::error::{Error, Result};
use crate::metric::{
    default_ridge, fit_mahalanobis, fit_nca, fit_rca, population_covariance, GeneralizedMetric,
    NcaOptions, RcaWeighting,
};
use crate::predict::{select_by_distance, softmax_from_distances, NaiveBayesModel, NbPrior};

pub const DEFAULT_THRESHOLD: f64 = 0.05;
pub const DEFAULT_K: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricKind {
    Nca,
    Mahalanobis,
    Rca,
    Euclidean,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::Nca,
        MetricKind::Mahalanobis,
        MetricKind::Rca,
        MetricKind::Euclidean,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Nca => "nca",
            MetricKind::Mahalanobis => "mahalanobis",
            MetricKind::Rca => "rca",
            MetricKind::Euclidean => "euclidean",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scope {
    Global,
    Local(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    Softmax,
    NaiveBayes,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Softmax => "softmax",
            ModelKind::NaiveBayes => "naive_bayes",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Global => f.write_str("global"),
            Scope::Local(k) => write!(f, "local({k})"),
        }
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nca" => Ok(MetricKind::Nca),
            "mahalanobis" | "mahal" => Ok(MetricKind::Mahalanobis),
            "rca" => Ok(MetricKind::Rca),
            "euclidean" => Ok(MetricKind::Euclidean),
            other => Err(Error::InvalidConfig(format!("unknown metric `{other}`"))),
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "softmax" => Ok(ModelKind::Softmax),
            "naive_bayes" | "nb" => Ok(ModelKind::NaiveBayes),
            other => Err(Error::InvalidConfig(format!("unknown model `{other}`"))),
        }
    }
}

impl FromStr for Scope {
    type Err = Error;

    /// Accepts `global`, `local` (k = 40), `local(k)` and `local:k`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "global" {
            return Ok(Scope::Global);
        }
        if s == "local" {
            return Ok(Scope::Local(DEFAULT_K));
        }
        let k = s
            .strip_prefix("local(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| s.strip_prefix("local:"))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scope `{s}`")))?;
        k.parse()
            .map(Scope::Local)
            .map_err(|_| Error::InvalidConfig(format!("bad neighborhood size in `{s}`")))
    }
}

/// Hyperparameters for fitting the covariance-based and learned metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricParams {
    /// Ridge for Mahalanobis and RCA; `None` uses `1e-6 · trace(Σ̂) / d`.
    pub ridge: Option<f64>,
    pub rca_weighting: RcaWeighting,
    pub nca: NcaOptions,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            ridge: None,
            rca_weighting: RcaWeighting::ClassSize,
            nca: NcaOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub metric_kind: MetricKind,
    pub scope: Scope,
    pub model_kind: ModelKind,
    pub threshold: f64,
    pub metric_params: MetricParams,
    pub nb_prior: NbPrior,
}

impl DetectorConfig {
    pub fn new(metric_kind: MetricKind, scope: Scope, model_kind: ModelKind) -> Self {
        Self {
            metric_kind,
            scope,
            model_kind,
            threshold: DEFAULT_THRESHOLD,
            metric_params: MetricParams::default(),
            nb_prior: NbPrior::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Scope::Local(0) = self.scope {
            return Err(Error::InvalidConfig("local scope needs k >= 1".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold {} outside (0, 1)",
                self.threshold
            )));
        }
        if let Some(r) = self.metric_params.ridge {
            if r.is_nan() || r < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "ridge {r} must be nonnegative"
                )));
            }
        }
        self.metric_params.nca.validate()?;
        self.nb_prior.validate()
    }

    /// Global naive Bayes ignores the metric entirely.
    pub fn uses_metric(&self) -> bool {
        !(self.scope == Scope::Global && self.model_kind == ModelKind::NaiveBayes)
    }

    /// Canonical sort key: model, scope, metric.
    pub fn sort_key(&self) -> (ModelKind, Scope, MetricKind) {
        (self.model_kind, self.scope, self.metric_kind)
    }

    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.model_kind, self.metric_kind, self.scope)
    }
}

/// Outcome of scoring one case.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyScore {
    pub case_id: String,
    /// Probability of the observed target value given the context.
    pub posterior: f64,
    pub is_anomaly: bool,
    pub metric_kind: MetricKind,
    pub scope: Scope,
    pub model_kind: ModelKind,
    /// Number of reference cases the model was built from.
    pub n_reference: usize,
}

/// Absolute threshold test: anomalous iff `posterior < threshold`.
pub fn flag(posterior: f64, threshold: f64) -> bool {
    posterior < threshold
}

/// Fits the metric named by `kind` on context rows `x` with class labels
/// taken from the target.
pub fn fit_metric(
    kind: MetricKind,
    x: &DMatrix<f64>,
    labels: &[u8],
    params: &MetricParams,
) -> Result<GeneralizedMetric> {
    let ridge = |x: &DMatrix<f64>| {
        params
            .ridge
            .unwrap_or_else(|| default_ridge(&population_covariance(x)))
    };
    match kind {
        MetricKind::Euclidean => Ok(GeneralizedMetric::euclidean(x.ncols())),
        MetricKind::Mahalanobis => fit_mahalanobis(x, ridge(x)),
        MetricKind::Rca => fit_rca(x, labels, ridge(x), params.rca_weighting),
        MetricKind::Nca => Ok(fit_nca(x, labels, &params.nca)?.metric),
    }
}

/// Scores one case against a database that must not contain it.
pub fn score_case(
    case_id: &str,
    case: &Instance,
    database: &Dataset,
    config: &DetectorConfig,
    metric: &GeneralizedMetric,
) -> Result<AnomalyScore> {
    if database.contains(case_id) {
        return Err(Error::LeaveOneOutViolation(case_id.to_string()));
    }
    if database.is_empty() {
        return Err(Error::EmptyReference);
    }
    let (context, observed) = project(case, database.schema())?;
    let targets = database.targets();

    let (distribution, n_reference) = match (config.scope, config.model_kind) {
        (Scope::Global, ModelKind::NaiveBayes) => {
            let model = NaiveBayesModel::fit(database, config.nb_prior);
            (model.predict(&context)?, database.n_cases())
        }
        (scope, model_kind) => {
            let query: Vec<f64> = context.iter().map(|&c| f64::from(c)).collect();
            let distances = metric.distances_to(&query, &database.context_matrix())?;
            let rows: Vec<usize> = match scope {
                Scope::Global => (0..database.n_cases()).collect(),
                Scope::Local(k) => select_by_distance(&distances, k)?.indices,
            };
            let p = match model_kind {
                ModelKind::Softmax => {
                    let d: Vec<f64> = rows.iter().map(|&r| distances[r]).collect();
                    let t: Vec<u8> = rows.iter().map(|&r| targets[r]).collect();
                    softmax_from_distances(&d, &t)
                }
                ModelKind::NaiveBayes => {
                    NaiveBayesModel::fit_rows(database, &rows, config.nb_prior).predict(&context)?
                }
            };
            (p, rows.len())
        }
    };

    let posterior = distribution[usize::from(observed)];
    Ok(AnomalyScore {
        case_id: case_id.to_string(),
        posterior,
        is_anomaly: flag(posterior, config.threshold),
        metric_kind: config.metric_kind,
        scope: config.scope,
        model_kind: config.model_kind,
        n_reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SchemaSpec;

    fn db(rows: &[(&str, [u8; 3])]) -> Dataset {
        let mut text = String::from("id,a,b,t\n");
        for (id, r) in rows {
            text += &format!("{id},{},{},{}\n", r[0], r[1], r[2]);
        }
        Dataset::read_csv(text.as_bytes(), &SchemaSpec::target("t")).unwrap()
    }

    #[test]
    fn flag_is_strict() {
        assert!(flag(0.04, 0.05));
        assert!(!flag(0.05, 0.05));
        assert!(!flag(0.9, 0.05));
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("NCA".parse::<MetricKind>().unwrap(), MetricKind::Nca);
        assert_eq!("local(12)".parse::<Scope>().unwrap(), Scope::Local(12));
        assert_eq!("local:3".parse::<Scope>().unwrap(), Scope::Local(3));
        assert_eq!("local".parse::<Scope>().unwrap(), Scope::Local(40));
        assert_eq!("nb".parse::<ModelKind>().unwrap(), ModelKind::NaiveBayes);
        assert!("manhattan".parse::<MetricKind>().is_err());
        assert!("local(x)".parse::<Scope>().is_err());
        for s in [Scope::Global, Scope::Local(40)] {
            assert_eq!(s.to_string().parse::<Scope>().unwrap(), s);
        }
    }

    #[test]
    fn config_validation() {
        let mut c = DetectorConfig::new(MetricKind::Euclidean, Scope::Local(0), ModelKind::Softmax);
        assert!(c.validate().is_err());
        c.scope = Scope::Local(1);
        assert!(c.validate().is_ok());
        c.threshold = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn unanimous_neighborhood_is_normal() {
        let database = db(&[
            ("p1", [1, 0, 1]),
            ("p2", [1, 0, 1]),
            ("p3", [1, 0, 1]),
            ("p4", [0, 1, 0]),
        ]);
        let case = Instance::new(vec![1, 0, 1]).unwrap();
        let metric = GeneralizedMetric::euclidean(2);
        for metric_kind in MetricKind::ALL {
            let config = DetectorConfig::new(metric_kind, Scope::Global, ModelKind::Softmax);
            let s = score_case("x", &case, &database, &config, &metric).unwrap();
            assert!(s.posterior > 0.9, "{}", s.posterior);
            assert!(!s.is_anomaly);
        }
    }

    #[test]
    fn flipped_minority_is_anomalous() {
        let mut rows = vec![("m", [1, 1, 1])];
        let ids: Vec<String> = (0..39).map(|i| format!("n{i}")).collect();
        for id in &ids {
            rows.push((id.as_str(), [1, 1, 0]));
        }
        let database = db(&rows);
        let case = Instance::new(vec![1, 1, 1]).unwrap();
        let config =
            DetectorConfig::new(MetricKind::Euclidean, Scope::Local(40), ModelKind::Softmax);
        let s = score_case(
            "x",
            &case,
            &database,
            &config,
            &GeneralizedMetric::euclidean(2),
        )
        .unwrap();
        assert!((s.posterior - 1.0 / 40.0).abs() < 1e-15);
        assert!(s.is_anomaly);
        assert_eq!(s.n_reference, 40);
    }

    #[test]
    fn global_nb_is_plain_naive_bayes() {
        let database = db(&[
            ("p1", [1, 0, 1]),
            ("p2", [1, 1, 0]),
            ("p3", [0, 0, 1]),
            ("p4", [0, 1, 0]),
            ("p5", [1, 1, 1]),
        ]);
        let case = Instance::new(vec![0, 1, 1]).unwrap();
        let config = DetectorConfig::new(MetricKind::Nca, Scope::Global, ModelKind::NaiveBayes);
        // the metric is irrelevant here
        let weird =
            GeneralizedMetric::new(DMatrix::from_row_slice(2, 2, &[9.0, 1.0, 0.0, 0.1])).unwrap();
        let s = score_case("x", &case, &database, &config, &weird).unwrap();
        let nb = NaiveBayesModel::fit(&database, NbPrior::default());
        assert_eq!(s.posterior, nb.predict(&[0, 1]).unwrap()[1]);
    }

    #[test]
    fn case_in_database_rejected() {
        let database = db(&[("p1", [1, 0, 1]), ("p2", [1, 1, 0])]);
        let case = database.instance(0);
        let config = DetectorConfig::new(MetricKind::Euclidean, Scope::Global, ModelKind::Softmax);
        let r = score_case(
            "p1",
            &case,
            &database,
            &config,
            &GeneralizedMetric::euclidean(2),
        );
        assert!(matches!(r, Err(Error::LeaveOneOutViolation(_))));
    }

    #[test]
    fn empty_database_rejected() {
        let database = db(&[("p1", [1, 0, 1])]).without(0);
        let config = DetectorConfig::new(MetricKind::Euclidean, Scope::Global, ModelKind::Softmax);
        let case = Instance::new(vec![1, 0, 1]).unwrap();
        let r = score_case(
            "x",
            &case,
            &database,
            &config,
            &GeneralizedMetric::euclidean(2),
        );
        assert!(matches!(r, Err(Error::EmptyReference)));
    }
}
