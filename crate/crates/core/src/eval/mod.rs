//! Evaluation protocol: a labeled cohort of cases, leave-one-out scoring
//! over a grid of detector configurations, ROC curves and the normalized
//! partial area in the high-specificity region.

mod cohort;
mod io;
mod loo;
mod report;
mod roc;

pub use cohort::{select_cohort, Cohort, CohortOptions};
pub use io::{read_eval_scores, write_eval_scores, write_roc_csv, write_scores_csv};
pub use loo::{run_loo, table1_grid, CaseRecord, ConfigResult, LooOptions, MetricTraining};
pub use report::{emit_report, EvalReport, ReportRow};
pub use roc::{partial_auc_norm, roc_curve, RocCurve, DEFAULT_MIN_SPECIFICITY};

/// Formats a float with 17 significant digits.
pub fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}
