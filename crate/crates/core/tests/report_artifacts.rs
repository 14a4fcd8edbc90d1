mod common;

use std::collections::BTreeMap;
use std::fs;

use common::*;
use ffesn::experiment::{read_trials_csv, ModelClass, TrialRecord, Variant};
use ffesn::report::{
    boxplot_rows, build_report, emit_artifacts, histogram_rows, summarize_records, ArtifactInputs,
    Overlay, ReportError, SummaryDocument, HISTOGRAM_BINS,
};
use proptest::prelude::*;
use rand::Rng;

fn records(seed: u64, n: usize) -> Vec<TrialRecord> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for (class, scale, lambda, alpha) in [
        (ModelClass::Ffesn, 0.04, 2.4e-3, 0.1),
        (ModelClass::Esn, 0.05, 4.53e-5, 0.2),
    ] {
        for i in 0..n {
            out.push(TrialRecord {
                model_class: class,
                variant: Variant::A,
                train_size: 900,
                lambda,
                alpha,
                trial_index: i,
                win_seed: r.random(),
                mse: scale * (1.0 + r.random_range(-0.2..0.2)),
            });
        }
    }
    out
}

fn overlays() -> Vec<Overlay> {
    vec![Overlay {
        model_class: ModelClass::Esn,
        variant: Variant::A,
        train_size: 900,
        truth: vec![0.5, 0.6, 0.7],
        predictions: vec![vec![0.4, 0.6, 0.8], vec![0.6, 0.6, 0.6]],
    }]
}

#[test]
fn empty_formats_emit_only_mandatory_files() {
    let recs = records(1, 50);
    let report = build_report(&summarize_records(&recs).unwrap());
    let ov = overlays();
    let dir = tempfile::tempdir().unwrap();
    let inputs = ArtifactInputs {
        records: &recs,
        report: &report,
        overlays: &ov,
    };
    let manifest = emit_artifacts(&inputs, dir.path(), &[]).unwrap();
    let names: Vec<&str> = manifest.files.iter().map(|e| e.path.as_str()).collect();
    assert_eq!(
        names,
        [
            "boxplot.csv",
            "histogram.csv",
            "overlay.csv",
            "report.csv",
            "report.txt",
            "summary.json",
            "trials.csv"
        ]
    );
    for e in &manifest.files {
        let bytes = fs::read(dir.path().join(&e.path)).unwrap();
        assert_eq!(bytes.len() as u64, e.bytes);
    }

    let svg = emit_artifacts(&inputs, dir.path(), &["svg".into()]).unwrap();
    assert!(svg.get("histogram.svg").is_some() && svg.get("overlay.svg").is_some());
    let text = fs::read_to_string(dir.path().join("boxplot.svg")).unwrap();
    assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
    assert!(matches!(
        emit_artifacts(&inputs, dir.path(), &["pdf".into()]),
        Err(ReportError::UnknownFormat(_))
    ));
}

#[test]
fn same_inputs_same_hashes() {
    let recs = records(2, 50);
    let report = build_report(&summarize_records(&recs).unwrap());
    let ov = overlays();
    let inputs = ArtifactInputs {
        records: &recs,
        report: &report,
        overlays: &ov,
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let formats = vec!["csv".to_string(), "svg".to_string()];
    assert_eq!(
        emit_artifacts(&inputs, a.path(), &formats).unwrap(),
        emit_artifacts(&inputs, b.path(), &formats).unwrap()
    );
}

#[test]
fn boxplot_matches_sort_based_quantiles() {
    let recs = records(3, 50);
    for row in boxplot_rows(&recs) {
        let vals: Vec<f64> = recs
            .iter()
            .filter(|r| r.model_class == row.model_class)
            .map(|r| r.mse)
            .collect();
        assert_eq!(row.n, 50);
        let got = [row.min, row.q1, row.median, row.q3, row.max];
        for (g, p) in got.iter().zip([0.0, 0.25, 0.5, 0.75, 1.0]) {
            assert!((g - sorted_quantile(&vals, p)).abs() < 1e-15, "p={p}");
        }
    }
}

#[test]
fn csv_resummary_matches_json() {
    let recs = records(4, 50);
    let summaries = summarize_records(&recs).unwrap();
    let report = build_report(&summaries);
    let dir = tempfile::tempdir().unwrap();
    let inputs = ArtifactInputs {
        records: &recs,
        report: &report,
        overlays: &[],
    };
    emit_artifacts(&inputs, dir.path(), &[]).unwrap();
    let csv = fs::read(dir.path().join("trials.csv")).unwrap();
    let parsed = read_trials_csv(csv.as_slice()).unwrap();
    let again = summarize_records(&parsed).unwrap();
    let json =
        SummaryDocument::from_json(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    for (a, b) in again.iter().zip(&json.summaries) {
        assert_eq!(a.model_class, b.model_class);
        for (x, y) in [
            (a.mean_mse, b.mean_mse),
            (a.variance, b.variance),
            (a.ci95[0], b.ci95[0]),
            (a.ci95[1], b.ci95[1]),
        ] {
            assert!((x - y).abs() <= 1e-12);
        }
    }
    assert_eq!(build_report(&json.summaries), report);
}

#[test]
fn overlay_csv_has_one_row_per_step() {
    let recs = records(5, 10);
    let report = build_report(&summarize_records(&recs).unwrap());
    let ov = overlays();
    let dir = tempfile::tempdir().unwrap();
    let inputs = ArtifactInputs {
        records: &recs,
        report: &report,
        overlays: &ov,
    };
    emit_artifacts(&inputs, dir.path(), &[]).unwrap();
    let text = fs::read_to_string(dir.path().join("overlay.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("ESN,A,900,0,0.5,0.5,"));
}

proptest! {
    #[test]
    fn histogram_counts_sum_to_records(seed in any::<u64>(), n in 2usize..80) {
        let recs = records(seed, n);
        let rows = histogram_rows(&recs);
        prop_assert_eq!(rows.len(), 2 * HISTOGRAM_BINS);
        let mut per_class: BTreeMap<ModelClass, usize> = BTreeMap::new();
        for r in &rows {
            *per_class.entry(r.model_class).or_default() += r.count;
            prop_assert!(r.bin_low <= r.bin_high);
        }
        prop_assert_eq!(per_class.values().sum::<usize>(), recs.len());
        prop_assert_eq!(per_class[&ModelClass::Esn], n);
    }
}
