use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{svg, ComparisonReport, ReportError, SummaryDocument};
use crate::experiment::{write_trials_csv, ModelClass, TrialRecord, Variant, Z_95};

pub const HISTOGRAM_BINS: usize = 20;

/// Validation truth and every trial's prediction for one (class, context).
#[derive(Debug, Clone, PartialEq)]
pub struct Overlay {
    pub model_class: ModelClass,
    pub variant: Variant,
    pub train_size: usize,
    pub truth: Vec<f64>,
    pub predictions: Vec<Vec<f64>>,
}

pub struct ArtifactInputs<'a> {
    pub records: &'a [TrialRecord],
    pub report: &'a ComparisonReport,
    /// May be empty; the overlay files are then skipped.
    pub overlays: &'a [Overlay],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    /// Hashes an already written file and records it.
    pub fn record_file(&mut self, out_dir: &Path, name: &str) -> Result<(), ReportError> {
        let path = out_dir.join(name);
        let bytes = fs::read(&path).map_err(|source| ReportError::Io { path, source })?;
        self.push(name, &bytes);
        Ok(())
    }

    fn push(&mut self, name: &str, bytes: &[u8]) {
        self.files.retain(|e| e.path != name);
        self.files.push(ManifestEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
    }

    pub fn get(&self, name: &str) -> Option<&ManifestEntry> {
        self.files.iter().find(|e| e.path == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        })
}

/// Linear-interpolation quantile of sorted data, `h = (n - 1) p`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `[min, q1, median, q3, max]`.
pub fn five_number_summary(values: &[f64]) -> [f64; 5] {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    [
        sorted[0],
        quantile(&sorted, 0.25),
        quantile(&sorted, 0.5),
        quantile(&sorted, 0.75),
        sorted[sorted.len() - 1],
    ]
}

type Groups = BTreeMap<(Variant, usize), BTreeMap<ModelClass, Vec<f64>>>;

fn group(records: &[TrialRecord]) -> Groups {
    let mut g: Groups = BTreeMap::new();
    for r in records {
        g.entry((r.variant, r.train_size))
            .or_default()
            .entry(r.model_class)
            .or_default()
            .push(r.mse);
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub variant: Variant,
    pub train_size: usize,
    pub model_class: ModelClass,
    pub bin_index: usize,
    pub bin_low: f64,
    pub bin_high: f64,
    pub count: usize,
}

/// Equal-width bins over the pooled MSE range of both classes in a context.
pub fn histogram_rows(records: &[TrialRecord]) -> Vec<HistogramRow> {
    let mut rows = Vec::new();
    for ((variant, train_size), classes) in group(records) {
        let pooled = classes.values().flatten();
        let lo = pooled.clone().copied().fold(f64::INFINITY, f64::min);
        let hi = pooled.copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (hi - lo) / HISTOGRAM_BINS as f64;
        for (model_class, values) in classes {
            let mut counts = [0usize; HISTOGRAM_BINS];
            for v in values {
                let k = if width > 0.0 {
                    (((v - lo) / width).floor() as usize).min(HISTOGRAM_BINS - 1)
                } else {
                    0
                };
                counts[k] += 1;
            }
            for (k, count) in counts.into_iter().enumerate() {
                let bin_high = if k + 1 == HISTOGRAM_BINS {
                    hi
                } else {
                    lo + (k + 1) as f64 * width
                };
                rows.push(HistogramRow {
                    variant,
                    train_size,
                    model_class,
                    bin_index: k,
                    bin_low: lo + k as f64 * width,
                    bin_high,
                    count,
                });
            }
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotRow {
    pub variant: Variant,
    pub train_size: usize,
    pub model_class: ModelClass,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn boxplot_rows(records: &[TrialRecord]) -> Vec<BoxplotRow> {
    let mut rows = Vec::new();
    for ((variant, train_size), classes) in group(records) {
        for (model_class, values) in classes {
            let [min, q1, median, q3, max] = five_number_summary(&values);
            rows.push(BoxplotRow {
                variant,
                train_size,
                model_class,
                n: values.len(),
                min,
                q1,
                median,
                q3,
                max,
            });
        }
    }
    rows
}

fn histogram_csv(rows: &[HistogramRow]) -> String {
    let mut out = String::from("variant,train_size,model_class,bin_index,bin_low,bin_high,count\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.variant, r.train_size, r.model_class, r.bin_index, r.bin_low, r.bin_high, r.count
        )
        .unwrap();
    }
    out
}

fn boxplot_csv(rows: &[BoxplotRow]) -> String {
    let mut out = String::from("variant,train_size,model_class,n,min,q1,median,q3,max\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.variant, r.train_size, r.model_class, r.n, r.min, r.q1, r.median, r.q3, r.max
        )
        .unwrap();
    }
    out
}

impl Overlay {
    /// Per-step `(mean, ci_low, ci_high)` across trial predictions.
    pub fn bands(&self) -> Vec<(f64, f64, f64)> {
        let n = self.predictions.len();
        (0..self.truth.len())
            .map(|t| {
                let col: Vec<f64> = self.predictions.iter().map(|p| p[t]).collect();
                let mean = col.iter().sum::<f64>() / n as f64;
                let half = if n > 1 {
                    let var =
                        col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
                    Z_95 * var.sqrt() / (n as f64).sqrt()
                } else {
                    0.0
                };
                (mean, mean - half, mean + half)
            })
            .collect()
    }
}

fn overlay_csv(overlays: &[Overlay]) -> String {
    let mut out = String::from(
        "model_class,variant,train_size,step,truth,pred_mean,pred_ci_low,pred_ci_high\n",
    );
    for o in overlays {
        for (t, (mean, lo, hi)) in o.bands().into_iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                o.model_class, o.variant, o.train_size, t, o.truth[t], mean, lo, hi
            )
            .unwrap();
        }
    }
    out
}

#[derive(Debug, Default)]
struct Formats {
    svg: bool,
}

fn parse_formats(formats: &[String]) -> Result<Formats, ReportError> {
    let mut f = Formats::default();
    for token in formats {
        match token.trim().to_ascii_lowercase().as_str() {
            "" | "csv" | "json" | "txt" => {}
            "svg" => f.svg = true,
            other => return Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
    Ok(f)
}

/// Rejects format tokens other than csv, json, txt and svg.
pub fn check_formats(formats: &[String]) -> Result<(), ReportError> {
    parse_formats(formats).map(|_| ())
}

/// Writes the trial CSV, summary JSON, report table (text and CSV),
/// histogram and boxplot CSVs and, when overlays are given, the overlay CSV.
/// `svg` in `formats` adds static renderings. Returns paths and hashes.
pub fn emit_artifacts(
    inputs: &ArtifactInputs<'_>,
    out_dir: &Path,
    formats: &[String],
) -> Result<Manifest, ReportError> {
    let formats = parse_formats(formats)?;
    fs::create_dir_all(out_dir).map_err(|source| ReportError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut manifest = Manifest::default();
    let mut write = |name: &str, content: &[u8]| -> Result<(), ReportError> {
        let path = out_dir.join(name);
        fs::write(&path, content).map_err(|source| ReportError::Io { path, source })?;
        manifest.push(name, content);
        Ok(())
    };

    let mut trials = Vec::new();
    write_trials_csv(inputs.records, &mut trials).expect("writing to a Vec cannot fail");
    write("trials.csv", &trials)?;
    let summary = SummaryDocument {
        summaries: inputs.report.summaries(),
    };
    write("summary.json", summary.to_json().as_bytes())?;
    write("report.txt", inputs.report.to_text().as_bytes())?;
    write("report.csv", inputs.report.to_csv().as_bytes())?;
    let hist = histogram_rows(inputs.records);
    write("histogram.csv", histogram_csv(&hist).as_bytes())?;
    let boxes = boxplot_rows(inputs.records);
    write("boxplot.csv", boxplot_csv(&boxes).as_bytes())?;
    if !inputs.overlays.is_empty() {
        write("overlay.csv", overlay_csv(inputs.overlays).as_bytes())?;
    }

    if formats.svg {
        write("histogram.svg", svg::histogram(&hist).as_bytes())?;
        write("boxplot.svg", svg::boxplot(&boxes).as_bytes())?;
        if !inputs.overlays.is_empty() {
            write("overlay.svg", svg::overlay(inputs.overlays).as_bytes())?;
        }
    }
    Ok(manifest)
}
