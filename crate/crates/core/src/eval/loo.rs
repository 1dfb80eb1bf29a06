use std::str::FromStr;

use rayon::prelude::*;

use super::Cohort;
use crate::data::Dataset;
use crate::detector::{
    fit_metric, score_case, DetectorConfig, MetricKind, MetricParams, ModelKind, Scope,
};
use crate::error::{Error, Result};
use crate::metric::GeneralizedMetric;

/// Which cases a metric is fitted on when scoring a cohort case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MetricTraining {
    /// Refit for every evaluated case on the database without that case.
    #[default]
    PerCase,
    /// Fit once on the database without any cohort case.
    Once,
    /// Refit for every evaluated case on the other cohort cases only.
    CohortOnly,
}

impl MetricTraining {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricTraining::PerCase => "per-case",
            MetricTraining::Once => "once",
            MetricTraining::CohortOnly => "cohort",
        }
    }
}

impl FromStr for MetricTraining {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-case" => Ok(MetricTraining::PerCase),
            "once" => Ok(MetricTraining::Once),
            "cohort" => Ok(MetricTraining::CohortOnly),
            other => Err(Error::InvalidConfig(format!(
                "unknown metric training mode `{other}` (per-case, once, cohort)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LooOptions {
    pub metric_training: MetricTraining,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseRecord {
    pub case_id: String,
    pub posterior: f64,
    pub is_anomaly: bool,
    pub label: bool,
    pub n_reference: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigResult {
    pub config: DetectorConfig,
    pub records: Vec<CaseRecord>,
}

impl ConfigResult {
    pub fn scores(&self) -> Vec<(f64, bool)> {
        self.records
            .iter()
            .map(|r| (r.posterior, r.label))
            .collect()
    }
}

/// The 16 configurations of the comparison grid: every metric with both
/// models, scored globally and on the `k` nearest cases.
pub fn table1_grid(k: usize) -> Vec<DetectorConfig> {
    let mut grid = Vec::with_capacity(16);
    for model in [ModelKind::Softmax, ModelKind::NaiveBayes] {
        for scope in [Scope::Global, Scope::Local(k)] {
            for metric in MetricKind::ALL {
                grid.push(DetectorConfig::new(metric, scope, model));
            }
        }
    }
    grid
}

/// Leave-one-out scoring of every cohort case under every configuration.
///
/// Each case is removed from the database before its metric is fitted and
/// before it is scored. Results come back in grid order with records in
/// cohort order; the outcome does not depend on the rayon pool size.
pub fn run_loo(
    database: &Dataset,
    cohort: &Cohort,
    grid: &[DetectorConfig],
    opts: &LooOptions,
) -> Result<Vec<ConfigResult>> {
    for config in grid {
        config.validate()?;
    }
    let rows: Vec<usize> = cohort
        .case_ids
        .iter()
        .map(|id| {
            database
                .index_of(id)
                .ok_or_else(|| Error::InvalidConfig(format!("cohort case `{id}` not in database")))
        })
        .collect::<Result<_>>()?;

    // configs sharing a metric kind and parameters share one fitted metric
    let mut groups: Vec<(MetricKind, &MetricParams)> = Vec::new();
    let config_group: Vec<Option<usize>> = grid
        .iter()
        .map(|c| {
            c.uses_metric().then(|| {
                let key = (c.metric_kind, &c.metric_params);
                groups.iter().position(|g| *g == key).unwrap_or_else(|| {
                    groups.push(key);
                    groups.len() - 1
                })
            })
        })
        .collect();

    let annotate = |config: &str, case_id: &str, e: Error| Error::Evaluation {
        config: config.to_string(),
        case_id: case_id.to_string(),
        source: Box::new(e),
    };
    let fit_groups = |training: &Dataset, case_id: &str| -> Result<Vec<GeneralizedMetric>> {
        let x = training.context_matrix();
        let labels = training.targets();
        groups
            .iter()
            .map(|(kind, params)| {
                fit_metric(*kind, &x, &labels, params)
                    .map_err(|e| annotate(&format!("metric {kind}"), case_id, e))
            })
            .collect()
    };

    let shared = match opts.metric_training {
        MetricTraining::Once => Some(fit_groups(&database.without_ids(&cohort.case_ids), "*")?),
        _ => None,
    };
    let euclidean = GeneralizedMetric::euclidean(database.schema().n_context());

    let per_case: Vec<Vec<CaseRecord>> = rows
        .par_iter()
        .enumerate()
        .map(|(c, &row)| {
            let case_id = &cohort.case_ids[c];
            let rest = database.without(row);
            let case = database.instance(row);
            let fitted;
            let metrics = match (&shared, opts.metric_training) {
                (Some(m), _) => m,
                (None, MetricTraining::CohortOnly) => {
                    let others: Vec<&String> =
                        cohort.case_ids.iter().filter(|id| *id != case_id).collect();
                    let idx: Vec<usize> =
                        others.iter().filter_map(|id| rest.index_of(id)).collect();
                    fitted = fit_groups(&rest.subset(&idx), case_id)?;
                    &fitted
                }
                (None, _) => {
                    fitted = fit_groups(&rest, case_id)?;
                    &fitted
                }
            };
            grid.iter()
                .zip(&config_group)
                .map(|(config, group)| {
                    let metric = group.map_or(&euclidean, |g| &metrics[g]);
                    let s = score_case(case_id, &case, &rest, config, metric)
                        .map_err(|e| annotate(&config.label(), case_id, e))?;
                    Ok(CaseRecord {
                        case_id: s.case_id,
                        posterior: s.posterior,
                        is_anomaly: s.is_anomaly,
                        label: cohort.labels[c],
                        n_reference: s.n_reference,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    Ok(grid
        .iter()
        .enumerate()
        .map(|(g, config)| ConfigResult {
            config: config.clone(),
            records: per_case.iter().map(|recs| recs[g].clone()).collect(),
        })
        .collect())
}
