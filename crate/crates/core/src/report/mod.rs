//! Comparison tables and figure data derived from trial records.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCategory;
use crate::experiment::{summarize, ExperimentError, ModelClass, TrialRecord, Variant};

mod artifacts;
mod svg;

pub use artifacts::{
    boxplot_rows, check_formats, emit_artifacts, five_number_summary, histogram_rows, quantile,
    sha256_hex, ArtifactInputs, BoxplotRow, HistogramRow, Manifest, ManifestEntry, Overlay,
    HISTOGRAM_BINS,
};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown output format `{0}` (expected csv, json, txt or svg)")]
    UnknownFormat(String),
    #[error("inconsistent records: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("summary json: {0}")]
    Json(String),
}

impl ReportError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            ReportError::Io { .. } => ErrorCategory::Io,
            ReportError::UnknownFormat(_) => ErrorCategory::InvalidConfig,
            ReportError::Inconsistent(_) | ReportError::Json(_) => ErrorCategory::Parse,
            ReportError::Experiment(e) => e.category(),
        }
    }
}

/// One (model class, variant, training size) result: the chosen
/// hyperparameters and the trial MSE statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub model_class: ModelClass,
    pub variant: Variant,
    pub train_size: usize,
    pub best_lambda: f64,
    pub best_alpha: f64,
    pub mean_mse: f64,
    pub ci95: [f64; 2],
    pub variance: f64,
    pub n_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDocument {
    pub summaries: Vec<ClassSummary>,
}

impl SummaryDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        serde_json::from_str(text).map_err(|e| ReportError::Json(e.to_string()))
    }
}

/// Groups records by (class, variant, training size) and summarizes each
/// group. Every record in a group must share the same `(lambda, alpha)`.
pub fn summarize_records(records: &[TrialRecord]) -> Result<Vec<ClassSummary>, ReportError> {
    let mut groups: BTreeMap<(Variant, usize, ModelClass), Vec<TrialRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.variant, r.train_size, r.model_class))
            .or_default()
            .push(r.clone());
    }
    groups
        .into_iter()
        .map(|((variant, train_size, model_class), group)| {
            let (lambda, alpha) = (group[0].lambda, group[0].alpha);
            if group.iter().any(|r| r.lambda != lambda || r.alpha != alpha) {
                return Err(ReportError::Inconsistent(format!(
                    "{model_class} variant {variant} size {train_size} mixes hyperparameters"
                )));
            }
            let stats = summarize(&group)?;
            Ok(ClassSummary {
                model_class,
                variant,
                train_size,
                best_lambda: lambda,
                best_alpha: alpha,
                mean_mse: stats.mean_mse,
                ci95: [stats.ci95_low, stats.ci95_high],
                variance: stats.variance,
                n_trials: stats.n_trials,
            })
        })
        .collect()
}

/// One column pair of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportContext {
    pub variant: Variant,
    pub train_size: usize,
    /// FFESN first when present.
    pub cells: Vec<ClassSummary>,
    /// Class whose CI lies entirely below the other's.
    pub significantly_better: Option<ModelClass>,
    /// Class with strictly smaller MSE variance.
    pub lower_variance: Option<ModelClass>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub contexts: Vec<ReportContext>,
}

fn markers(a: &ClassSummary, b: &ClassSummary) -> (Option<ModelClass>, Option<ModelClass>) {
    let significant = if a.ci95[1] < b.ci95[0] {
        Some(a.model_class)
    } else if b.ci95[1] < a.ci95[0] {
        Some(b.model_class)
    } else {
        None
    };
    let variance = if a.variance < b.variance {
        Some(a.model_class)
    } else if b.variance < a.variance {
        Some(b.model_class)
    } else {
        None
    };
    (significant, variance)
}

pub fn build_report(summaries: &[ClassSummary]) -> ComparisonReport {
    let mut by_context: BTreeMap<(Variant, usize), Vec<ClassSummary>> = BTreeMap::new();
    for s in summaries {
        by_context
            .entry((s.variant, s.train_size))
            .or_default()
            .push(s.clone());
    }
    let contexts = by_context
        .into_iter()
        .map(|((variant, train_size), mut cells)| {
            cells.sort_by_key(|c| c.model_class);
            let mut warnings = Vec::new();
            let (mut significantly_better, mut lower_variance) = (None, None);
            if cells.len() == 2 && cells[0].model_class != cells[1].model_class {
                (significantly_better, lower_variance) = markers(&cells[0], &cells[1]);
            } else {
                let present: Vec<&str> = cells.iter().map(|c| c.model_class.as_str()).collect();
                warnings.push(format!(
                    "partial report: expected one FFESN and one ESN summary, found [{}]",
                    present.join(", ")
                ));
            }
            ReportContext {
                variant,
                train_size,
                cells,
                significantly_better,
                lower_variance,
                warnings,
            }
        })
        .collect();
    ComparisonReport { contexts }
}

pub const REPORT_CSV_HEADER: &str = "variant,train_size,model_class,best_lambda,best_alpha,mean_mse,ci95_low,ci95_high,variance,n_trials,significantly_better,lower_variance";

impl ComparisonReport {
    pub fn summaries(&self) -> Vec<ClassSummary> {
        self.contexts
            .iter()
            .flat_map(|c| c.cells.iter().cloned())
            .collect()
    }

    /// True when every marker matches what the numbers imply.
    pub fn markers_consistent(&self) -> bool {
        self.contexts.iter().all(|c| {
            if c.cells.len() == 2 {
                markers(&c.cells[0], &c.cells[1]) == (c.significantly_better, c.lower_variance)
            } else {
                c.significantly_better.is_none() && c.lower_variance.is_none()
            }
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{REPORT_CSV_HEADER}").unwrap();
        for c in &self.contexts {
            for cell in &c.cells {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    c.variant,
                    c.train_size,
                    cell.model_class,
                    cell.best_lambda,
                    cell.best_alpha,
                    cell.mean_mse,
                    cell.ci95[0],
                    cell.ci95[1],
                    cell.variance,
                    cell.n_trials,
                    c.significantly_better == Some(cell.model_class),
                    c.lower_variance == Some(cell.model_class),
                )
                .unwrap();
            }
        }
        out
    }

    /// Aligned plain-text table, one column per (context, class). A `*`
    /// marks the significantly better CI and the lower variance.
    pub fn to_text(&self) -> String {
        let labels = [
            "Best lambda",
            "Best alpha",
            "MSE mean",
            "MSE 95% CI",
            "MSE variance",
            "Trials",
        ];
        let mut rows: Vec<Vec<String>> = labels.iter().map(|s| vec![s.to_string()]).collect();
        let mut top = vec![String::new()];
        let mut second = vec![String::new()];
        for c in &self.contexts {
            for cell in &c.cells {
                top.push(format!("Variant {} A={}", c.variant, c.train_size));
                second.push(cell.model_class.to_string());
                let star = |flag: Option<ModelClass>| {
                    if flag == Some(cell.model_class) {
                        "*"
                    } else {
                        ""
                    }
                };
                rows[0].push(format!("{}", cell.best_lambda));
                rows[1].push(format!("{}", cell.best_alpha));
                rows[2].push(format!("{:.4e}", cell.mean_mse));
                rows[3].push(format!(
                    "[{:.4e}, {:.4e}]{}",
                    cell.ci95[0],
                    cell.ci95[1],
                    star(c.significantly_better)
                ));
                rows[4].push(format!("{:.3e}{}", cell.variance, star(c.lower_variance)));
                rows[5].push(cell.n_trials.to_string());
            }
        }
        let mut table = vec![top, second];
        table.extend(rows);
        let ncols = table[0].len();
        let widths: Vec<usize> = (0..ncols)
            .map(|j| {
                table
                    .iter()
                    .map(|r| r[j].chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for row in &table {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    if j == 0 {
                        format!("{s:<w$}", w = widths[j])
                    } else {
                        format!("{s:>w$}", w = widths[j])
                    }
                })
                .collect();
            writeln!(out, "{}", line.join(" | ").trim_end()).unwrap();
        }
        writeln!(
            out,
            "\n* significantly better (non-overlapping 95% CI) or lower variance"
        )
        .unwrap();
        for c in &self.contexts {
            for w in &c.warnings {
                writeln!(
                    out,
                    "warning (variant {} A={}): {w}",
                    c.variant, c.train_size
                )
                .unwrap();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(class: ModelClass, ci: [f64; 2], variance: f64) -> ClassSummary {
        ClassSummary {
            model_class: class,
            variant: Variant::A,
            train_size: 900,
            best_lambda: 0.0024,
            best_alpha: 0.1,
            mean_mse: (ci[0] + ci[1]) / 2.0,
            ci95: ci,
            variance,
            n_trials: 50,
        }
    }

    #[test]
    fn non_overlapping_ci_is_significant() {
        let r = build_report(&[
            cell(ModelClass::Ffesn, [0.042, 0.043], 3.76e-8),
            cell(ModelClass::Esn, [0.046, 0.051], 1.46e-6),
        ]);
        let c = &r.contexts[0];
        assert_eq!(c.significantly_better, Some(ModelClass::Ffesn));
        assert_eq!(c.lower_variance, Some(ModelClass::Ffesn));
        assert!(r.markers_consistent());
    }

    #[test]
    fn identical_summaries_have_no_markers() {
        let a = cell(ModelClass::Ffesn, [0.01, 0.02], 1e-6);
        let b = ClassSummary {
            model_class: ModelClass::Esn,
            ..a.clone()
        };
        let c = &build_report(&[a, b]).contexts[0];
        assert_eq!((c.significantly_better, c.lower_variance), (None, None));
    }

    #[test]
    fn overlapping_ci_only_variance_marker() {
        let r = build_report(&[
            cell(ModelClass::Esn, [0.013, 0.025], 9.03e-6),
            cell(ModelClass::Ffesn, [0.016, 0.017], 4.89e-8),
        ]);
        let c = &r.contexts[0];
        assert_eq!(c.cells[0].model_class, ModelClass::Ffesn);
        assert_eq!(c.significantly_better, None);
        assert_eq!(c.lower_variance, Some(ModelClass::Ffesn));
    }

    #[test]
    fn missing_counterpart_warns() {
        let r = build_report(&[cell(ModelClass::Esn, [0.1, 0.2], 1.0)]);
        assert_eq!(r.contexts[0].warnings.len(), 1);
        assert!(r.to_text().contains("partial report"));
        assert!(r.markers_consistent());
    }

    #[test]
    fn text_table_shape() {
        let r = build_report(&[
            cell(ModelClass::Ffesn, [0.042, 0.043], 3.76e-8),
            cell(ModelClass::Esn, [0.046, 0.051], 1.46e-6),
        ]);
        let text = r.to_text();
        for label in [
            "Best lambda",
            "Best alpha",
            "MSE 95% CI",
            "MSE variance",
            "FFESN",
            "ESN",
        ] {
            assert!(text.contains(label), "{label}");
        }
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().ends_with("true,true"));
    }

    #[test]
    fn summary_json_round_trip_rebuilds_report() {
        let summaries = vec![
            cell(ModelClass::Ffesn, [0.042, 0.043], 3.76e-8),
            cell(ModelClass::Esn, [0.046, 0.051], 1.46e-6),
        ];
        let doc = SummaryDocument {
            summaries: summaries.clone(),
        };
        let back = SummaryDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(build_report(&back.summaries), build_report(&summaries));
    }

    #[test]
    fn mixed_hyperparameters_rejected() {
        let mk = |lambda| TrialRecord {
            model_class: ModelClass::Esn,
            variant: Variant::B,
            train_size: 300,
            lambda,
            alpha: 0.5,
            trial_index: 0,
            win_seed: 0,
            mse: 0.1,
        };
        assert!(matches!(
            summarize_records(&[mk(0.1), mk(0.2)]),
            Err(ReportError::Inconsistent(_))
        ));
        assert!(summarize_records(&[mk(0.1), mk(0.1)]).is_ok());
    }
}
