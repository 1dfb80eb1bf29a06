//! CSV exchange formats for scores and ROC points.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use super::{fmt_full, CaseRecord, ConfigResult, RocCurve};
use crate::detector::{AnomalyScore, DetectorConfig, MetricKind, ModelKind, Scope};
use crate::error::{Error, Result};

fn create(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish<W: Write>(mut wtr: csv::Writer<W>, path: &Path) -> Result<()> {
    wtr.flush().map_err(|e| Error::io(path, e))
}

/// `case_id,metric_kind,scope,model_kind,posterior,is_anomaly`
pub fn write_scores_csv(path: impl AsRef<Path>, scores: &[AnomalyScore]) -> Result<()> {
    let path = path.as_ref();
    let mut wtr = create(path)?;
    wtr.write_record([
        "case_id",
        "metric_kind",
        "scope",
        "model_kind",
        "posterior",
        "is_anomaly",
    ])?;
    for s in scores {
        wtr.write_record([
            s.case_id.clone(),
            s.metric_kind.to_string(),
            s.scope.to_string(),
            s.model_kind.to_string(),
            fmt_full(s.posterior),
            u8::from(s.is_anomaly).to_string(),
        ])?;
    }
    finish(wtr, path)
}

/// Evaluation scores: the score record plus the cohort label and reference
/// size. Rows are sorted by configuration, then case id.
pub fn write_eval_scores(path: impl AsRef<Path>, results: &[ConfigResult]) -> Result<()> {
    let path = path.as_ref();
    let mut sorted: Vec<&ConfigResult> = results.iter().collect();
    sorted.sort_by_key(|r| r.config.sort_key());
    let mut wtr = create(path)?;
    wtr.write_record([
        "case_id",
        "metric_kind",
        "scope",
        "model_kind",
        "posterior",
        "is_anomaly",
        "label",
        "n_reference",
    ])?;
    for result in sorted {
        let mut records: Vec<&CaseRecord> = result.records.iter().collect();
        records.sort_by(|a, b| a.case_id.cmp(&b.case_id));
        for r in records {
            wtr.write_record([
                r.case_id.clone(),
                result.config.metric_kind.to_string(),
                result.config.scope.to_string(),
                result.config.model_kind.to_string(),
                fmt_full(r.posterior),
                u8::from(r.is_anomaly).to_string(),
                u8::from(r.label).to_string(),
                r.n_reference.to_string(),
            ])?;
        }
    }
    finish(wtr, path)
}

/// Reads a file written by [`write_eval_scores`]. Configurations get default
/// thresholds and hyperparameters; only their kinds are stored.
pub fn read_eval_scores(path: impl AsRef<Path>) -> Result<Vec<ConfigResult>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let mut grouped: BTreeMap<(ModelKind, Scope, MetricKind), Vec<CaseRecord>> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| rec.get(k).unwrap_or("").trim();
        let bad = |what: &str| Error::InvalidConfig(format!("scores row {}: bad {what}", i + 1));
        let bit = |k: usize, what: &str| match field(k) {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(bad(what)),
        };
        let metric: MetricKind = field(1).parse()?;
        let scope: Scope = field(2).parse()?;
        let model: ModelKind = field(3).parse()?;
        grouped
            .entry((model, scope, metric))
            .or_default()
            .push(CaseRecord {
                case_id: field(0).to_string(),
                posterior: field(4).parse().map_err(|_| bad("posterior"))?,
                is_anomaly: bit(5, "is_anomaly")?,
                label: bit(6, "label")?,
                n_reference: field(7).parse().map_err(|_| bad("n_reference"))?,
            });
    }
    Ok(grouped
        .into_iter()
        .map(|((model, scope, metric), records)| ConfigResult {
            config: DetectorConfig::new(metric, scope, model),
            records,
        })
        .collect())
}

/// `fpr,tpr` per curve point.
pub fn write_roc_csv(path: impl AsRef<Path>, curve: &RocCurve) -> Result<()> {
    let path = path.as_ref();
    let mut wtr = create(path)?;
    wtr.write_record(["fpr", "tpr"])?;
    for &(fpr, tpr) in &curve.points {
        wtr.write_record([fmt_full(fpr), fmt_full(tpr)])?;
    }
    finish(wtr, path)
}
