use std::fmt::Write as _;

use super::roc::{partial_auc_norm, roc_curve};
use super::ConfigResult;
use crate::detector::{MetricKind, ModelKind, Scope};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub model_kind: ModelKind,
    /// `None` for the collapsed global naive Bayes row, which does not depend on the metric.
    pub metric_kind: Option<MetricKind>,
    pub scope: Scope,
    pub n_reference_cases: usize,
    /// Normalized partial AUC in percent.
    pub partial_auc: f64,
}

impl ReportRow {
    pub fn metric_label(&self) -> &'static str {
        self.metric_kind.map_or("any", MetricKind::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub min_specificity: f64,
    pub rows: Vec<ReportRow>,
}

/// One row per (model, metric, scope); global naive Bayes collapses to a
/// single `any` row. Rows are ordered model, scope, metric.
pub fn emit_report(results: &[ConfigResult], min_specificity: f64) -> Result<EvalReport> {
    if results.is_empty() {
        return Err(Error::InvalidConfig("no results to report".into()));
    }
    let mut sorted: Vec<&ConfigResult> = results.iter().collect();
    sorted.sort_by_key(|r| r.config.sort_key());

    let mut rows: Vec<ReportRow> = Vec::new();
    for result in sorted {
        let c = &result.config;
        let collapsed = c.scope == Scope::Global && c.model_kind == ModelKind::NaiveBayes;
        let metric_kind = (!collapsed).then_some(c.metric_kind);
        if rows.iter().any(|r| {
            r.model_kind == c.model_kind && r.scope == c.scope && r.metric_kind == metric_kind
        }) {
            continue;
        }
        let curve = roc_curve(&result.scores()).map_err(|e| Error::Evaluation {
            config: c.label(),
            case_id: "*".into(),
            source: Box::new(e),
        })?;
        let n_reference_cases = match c.scope {
            Scope::Local(k) => k,
            Scope::Global => result
                .records
                .iter()
                .map(|r| r.n_reference)
                .max()
                .unwrap_or(0),
        };
        rows.push(ReportRow {
            model_kind: c.model_kind,
            metric_kind,
            scope: c.scope,
            n_reference_cases,
            partial_auc: partial_auc_norm(&curve, min_specificity),
        });
    }
    Ok(EvalReport {
        min_specificity,
        rows,
    })
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,metric,scope,n_reference_cases,partial_auc_percent\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.model_kind,
                r.metric_label(),
                r.scope,
                r.n_reference_cases,
                super::fmt_full(r.partial_auc)
            );
        }
        out
    }

    /// Aligned plain-text table with one-decimal percentages.
    pub fn to_table(&self) -> String {
        let header = ["model", "metric", "selection", "#cases", "area"];
        let body: Vec<[String; 5]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.model_kind.to_string(),
                    r.metric_label().to_string(),
                    match r.scope {
                        Scope::Global => "global".to_string(),
                        Scope::Local(_) => "local".to_string(),
                    },
                    r.n_reference_cases.to_string(),
                    format!("{:.1} %", r.partial_auc),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = format!(
            "Partial area under the ROC curve, specificity >= {:.0}%\n",
            100.0 * self.min_specificity
        );
        let line = |cells: [&str; 5]| {
            format!(
                "{:<w0$}  {:<w1$}  {:<w2$}  {:>w3$}  {:>w4$}\n",
                cells[0],
                cells[1],
                cells[2],
                cells[3],
                cells[4],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2],
                w3 = widths[3],
                w4 = widths[4],
            )
        };
        out += &line(header);
        for row in &body {
            out += &line([&row[0], &row[1], &row[2], &row[3], &row[4]]);
        }
        out
    }
}
