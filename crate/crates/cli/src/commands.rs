use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use cad_core::data::{generate_synthetic, Dataset, GroundTruth, SchemaSpec, SyntheticConfig};
use cad_core::detector::{self, score_case, DetectorConfig, MetricKind, MetricParams};
use cad_core::eval::{
    emit_report, read_eval_scores, roc_curve, run_loo, select_cohort, table1_grid,
    write_eval_scores, write_roc_csv, write_scores_csv, Cohort, CohortOptions, ConfigResult,
    LooOptions, MetricTraining,
};
use cad_core::metric::{GeneralizedMetric, NcaOptions, RcaWeighting};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::manifest::{apply_config, sibling_manifest, RunManifest, MANIFEST_NAME};
use crate::{DbArgs, EvalArgs, FitMetricArgs, GenArgs, MetricArgs, ReportArgs, ScoreArgs};

fn resolve<T: Serialize + DeserializeOwned>(
    args: T,
    config: Option<&Path>,
    subcommand: &str,
) -> Result<T> {
    match config {
        Some(path) => apply_config(args, path, subcommand),
        None => Ok(args),
    }
}

fn required<'a>(value: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| anyhow!("missing required key `{key}` (--{})", key.replace('_', "-")))
}

fn parse_key<T>(key: &str, value: &str) -> Result<T>
where
    T: FromStr,
    T::Err: std::error::Error + Send + Sync + 'static,
{
    value
        .parse()
        .with_context(|| format!("invalid value for key `{key}`"))
}

fn check_key(key: &str, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        bail!("invalid value for key `{key}`: {what}")
    }
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    // 0 means every core; resolved here so rayon never reads RAYON_NUM_THREADS
    let jobs = match jobs {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building worker pool for key `jobs`")
}

fn load_db(args: &DbArgs, manifest: &mut RunManifest) -> Result<Dataset> {
    let path = required(&args.db, "db")?;
    let spec = match &args.schema {
        Some(schema) => {
            manifest.input(schema)?;
            SchemaSpec::from_file(schema).context("invalid value for key `schema`")?
        }
        None => SchemaSpec::target(args.target.clone()),
    };
    let db = Dataset::load_csv(path, &spec)?;
    manifest.input(path)?;
    Ok(db)
}

fn metric_params(args: &MetricArgs) -> Result<MetricParams> {
    if let Some(ridge) = args.ridge {
        check_key(
            "ridge",
            ridge.is_finite() && ridge >= 0.0,
            "must be a finite non-negative number",
        )?;
    }
    let rca_weighting = match args.rca_weighting.as_str() {
        "class-size" => RcaWeighting::ClassSize,
        "unweighted" => RcaWeighting::Unweighted,
        other => bail!("invalid value for key `rca_weighting`: `{other}` (class-size, unweighted)"),
    };
    let nca = NcaOptions {
        max_iterations: args.nca_max_iterations,
        regularization: args.nca_regularization,
        tolerance: args.nca_tolerance,
        ..NcaOptions::default()
    };
    nca.validate()
        .context("invalid NCA options (keys `nca_*`)")?;
    Ok(MetricParams {
        ridge: args.ridge,
        rca_weighting,
        nca,
    })
}

fn write_text(path: &Path, text: &str, manifest: &mut RunManifest) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing `{}`", path.display()))?;
    manifest.output(path)
}

pub fn gen(args: GenArgs) -> Result<()> {
    let args = resolve(args.clone(), args.config.as_deref(), "gen")?;
    let out = required(&args.out, "out")?;
    check_key("n", args.n > 0, "must be positive")?;
    check_key(
        "anomaly_rate",
        (0.0..=1.0).contains(&args.anomaly_rate),
        "must lie in [0, 1]",
    )?;

    let config = SyntheticConfig::port_like(args.n, args.anomaly_rate, args.seed);
    let (db, truth) = generate_synthetic(&config)?;
    let truth_path = out.with_file_name(format!(
        "{}.truth.csv",
        out.file_stem()
            .map_or_else(|| "db".into(), |s| s.to_string_lossy())
    ));
    db.write_csv(out)?;
    truth.write_csv(&truth_path)?;

    let mut manifest = RunManifest::new("gen", Some(args.seed), &args)?;
    manifest.output(out)?;
    manifest.output(&truth_path)?;
    manifest.save(&sibling_manifest(out))
}

pub fn fit_metric(args: FitMetricArgs) -> Result<()> {
    let args = resolve(args.clone(), args.config.as_deref(), "fit-metric")?;
    let out = required(&args.out, "out")?;
    let kind: MetricKind = parse_key("metric", &args.metric)?;
    let params = metric_params(&args.metric_args)?;

    let mut manifest = RunManifest::new("fit-metric", None, &args)?;
    let db = load_db(&args.db, &mut manifest)?;
    let metric = detector::fit_metric(kind, &db.context_matrix(), &db.targets(), &params)?;
    metric.save(out)?;
    manifest.output(out)?;
    manifest.save(&sibling_manifest(out))
}

fn detector_config(
    metric: &str,
    scope: &str,
    model: &str,
    threshold: f64,
    params: MetricParams,
) -> Result<DetectorConfig> {
    let mut config = DetectorConfig::new(
        parse_key("metric", metric)?,
        parse_key("scope", scope)?,
        parse_key("model", model)?,
    );
    check_key(
        "threshold",
        0.0 < threshold && threshold < 1.0,
        "must lie in (0, 1)",
    )?;
    config.threshold = threshold;
    config.metric_params = params;
    config
        .validate()
        .context("invalid detector configuration")?;
    Ok(config)
}

pub fn score(args: ScoreArgs) -> Result<()> {
    let args = resolve(args.clone(), args.config.as_deref(), "score")?;
    let out = required(&args.out, "out")?;
    let config = detector_config(
        &args.metric,
        &args.scope,
        &args.model,
        args.threshold,
        metric_params(&args.metric_args)?,
    )?;

    let mut manifest = RunManifest::new("score", None, &args)?;
    let db = load_db(&args.db, &mut manifest)?;
    let fixed_metric = match &args.metric_file {
        Some(path) => {
            manifest.input(path)?;
            Some(GeneralizedMetric::load(path).context("invalid value for key `metric_file`")?)
        }
        None => None,
    };
    let rows: Vec<usize> = match &args.cases {
        Some(ids) => ids
            .iter()
            .map(|id| {
                db.index_of(id).ok_or_else(|| {
                    anyhow!("invalid value for key `cases`: `{id}` is not in the database")
                })
            })
            .collect::<Result<_>>()?,
        None => (0..db.n_cases()).collect(),
    };

    let pool = thread_pool(args.jobs)?;
    let mut scores = pool.install(|| {
        rows.par_iter()
            .map(|&i| {
                let id = &db.case_ids()[i];
                let rest = db.without(i);
                let metric = match (&fixed_metric, config.uses_metric()) {
                    (Some(m), _) => m.clone(),
                    (None, true) => detector::fit_metric(
                        config.metric_kind,
                        &rest.context_matrix(),
                        &rest.targets(),
                        &config.metric_params,
                    )?,
                    (None, false) => GeneralizedMetric::euclidean(rest.schema().n_context()),
                };
                score_case(id, &db.instance(i), &rest, &config, &metric)
                    .with_context(|| format!("scoring case `{id}`"))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    scores.sort_by(|a, b| a.case_id.cmp(&b.case_id));

    write_scores_csv(out, &scores)?;
    manifest.output(out)?;
    manifest.save(&sibling_manifest(out))
}

/// File name for a configuration's ROC points, e.g. `softmax_nca_local40.csv`.
fn roc_file_name(config: &DetectorConfig) -> String {
    let label: String = config
        .label()
        .chars()
        .filter_map(|c| match c {
            '/' => Some('_'),
            '(' | ')' => None,
            c => Some(c),
        })
        .collect();
    format!("{label}.csv")
}

fn write_report(
    results: &[ConfigResult],
    min_specificity: f64,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<()> {
    let report = emit_report(results, min_specificity)?;
    write_text(&out.join("report.csv"), &report.to_csv(), manifest)?;
    write_text(&out.join("report.txt"), &report.to_table(), manifest)
}

fn write_cohort(path: &Path, cohort: &Cohort) -> Result<()> {
    let mut wtr =
        csv::Writer::from_path(path).with_context(|| format!("writing `{}`", path.display()))?;
    wtr.write_record(["case_id", "label"])?;
    for (id, &label) in cohort.case_ids.iter().zip(&cohort.labels) {
        wtr.write_record([id.as_str(), if label { "1" } else { "0" }])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let args = resolve(args.clone(), args.config.as_deref(), "eval")?;
    let out = required(&args.out, "out")?;
    let truth_path = required(&args.truth, "truth")?;
    let params = metric_params(&args.metric_args)?;
    check_key(
        "min_specificity",
        (0.0..1.0).contains(&args.min_specificity),
        "must lie in [0, 1)",
    )?;
    check_key("k", args.k > 0, "must be positive")?;
    let metric_training: MetricTraining = parse_key("metric_training", &args.metric_training)?;
    check_key(
        "threshold",
        0.0 < args.threshold && args.threshold < 1.0,
        "must lie in (0, 1)",
    )?;
    let grid = match args.grid.as_str() {
        "table1" => table1_grid(args.k)
            .into_iter()
            .map(|mut c| {
                c.threshold = args.threshold;
                c.metric_params = params.clone();
                c
            })
            .collect(),
        "single" => vec![detector_config(
            &args.metric,
            &args.scope,
            &args.model,
            args.threshold,
            params,
        )?],
        other => bail!("invalid value for key `grid`: `{other}` (table1, single)"),
    };

    let mut manifest = RunManifest::new("eval", Some(args.seed), &args)?;
    let db = load_db(&args.db, &mut manifest)?;
    let truth = GroundTruth::load_csv(truth_path).context("reading key `truth`")?;
    manifest.input(truth_path)?;

    let cohort = select_cohort(
        &db,
        &truth,
        &CohortOptions {
            n_flagged: args.n_flagged,
            n_random: args.n_random,
            threshold: args.threshold,
            seed: args.seed,
            ..CohortOptions::default()
        },
    )?;
    for warning in &cohort.warnings {
        eprintln!("cad: warning: {warning}");
    }
    manifest.warnings = cohort.warnings.clone();

    let pool = thread_pool(args.jobs)?;
    let results = pool.install(|| run_loo(&db, &cohort, &grid, &LooOptions { metric_training }))?;

    let roc_dir = out.join("roc");
    fs::create_dir_all(&roc_dir).with_context(|| format!("creating `{}`", roc_dir.display()))?;
    write_cohort(&out.join("cohort.csv"), &cohort)?;
    manifest.output(&out.join("cohort.csv"))?;
    write_eval_scores(out.join("scores.csv"), &results)?;
    manifest.output(&out.join("scores.csv"))?;
    write_report(&results, args.min_specificity, out, &mut manifest)?;
    for result in &results {
        let curve = roc_curve(&result.scores())
            .with_context(|| format!("ROC for `{}`", result.config.label()))?;
        let path = roc_dir.join(roc_file_name(&result.config));
        write_roc_csv(&path, &curve)?;
        manifest.output(&path)?;
    }
    manifest.save(&out.join(MANIFEST_NAME))
}

pub fn report(args: ReportArgs) -> Result<()> {
    let args = resolve(args.clone(), args.config.as_deref(), "report")?;
    let out = required(&args.out, "out")?;
    let scores = required(&args.scores, "scores")?;
    check_key(
        "min_specificity",
        (0.0..1.0).contains(&args.min_specificity),
        "must lie in [0, 1)",
    )?;
    let mut manifest = RunManifest::new("report", None, &args)?;
    let results = read_eval_scores(scores)?;
    manifest.input(scores)?;
    fs::create_dir_all(out).with_context(|| format!("creating `{}`", out.display()))?;
    write_report(&results, args.min_specificity, out, &mut manifest)?;
    manifest.save(&out.join(MANIFEST_NAME))
}
