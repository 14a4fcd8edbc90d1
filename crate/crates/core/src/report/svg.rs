//! Minimal static SVG renderings. One panel per (variant, training size),
//! stacked vertically.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{BoxplotRow, HistogramRow, Overlay};
use crate::experiment::{ModelClass, Variant};

const W: f64 = 640.0;
const PANEL_H: f64 = 240.0;
const PAD: f64 = 40.0;

fn color(class: ModelClass) -> &'static str {
    match class {
        ModelClass::Ffesn => "#1f77b4",
        ModelClass::Esn => "#d62728",
    }
}

fn open(panels: usize) -> String {
    let h = PANEL_H * panels.max(1) as f64;
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{h}\" viewBox=\"0 0 {W} {h}\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn frame(out: &mut String, top: f64, title: &str) {
    writeln!(
        out,
        "<text x=\"{PAD}\" y=\"{:.1}\">{title}</text>\n<rect x=\"{PAD}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#888\"/>",
        top + 16.0,
        top + 24.0,
        W - 2.0 * PAD,
        PANEL_H - 48.0
    )
    .unwrap();
}

fn legend(out: &mut String, top: f64, classes: &[ModelClass]) {
    for (i, &c) in classes.iter().enumerate() {
        let x = W - PAD - 120.0 + i as f64 * 60.0;
        writeln!(
            out,
            "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{}\"/><text x=\"{:.1}\" y=\"{:.1}\">{c}</text>",
            top + 7.0,
            color(c),
            x + 14.0,
            top + 16.0
        )
        .unwrap();
    }
}

/// Maps `v` in `[lo, hi]` onto `[a, b]`; a degenerate range maps to the middle.
fn scale(v: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    if hi > lo {
        a + (v - lo) / (hi - lo) * (b - a)
    } else {
        (a + b) / 2.0
    }
}

fn plot_box(top: f64) -> (f64, f64, f64, f64) {
    (PAD, W - PAD, top + PANEL_H - 24.0, top + 24.0)
}

pub fn histogram(rows: &[HistogramRow]) -> String {
    let mut panels: BTreeMap<(Variant, usize), Vec<&HistogramRow>> = BTreeMap::new();
    for r in rows {
        panels.entry((r.variant, r.train_size)).or_default().push(r);
    }
    let mut out = open(panels.len());
    for (p, ((variant, size), rows)) in panels.iter().enumerate() {
        let top = p as f64 * PANEL_H;
        frame(
            &mut out,
            top,
            &format!("MSE histogram, variant {variant}, A={size}"),
        );
        let classes: Vec<ModelClass> = {
            let mut c: Vec<_> = rows.iter().map(|r| r.model_class).collect();
            c.dedup();
            c
        };
        legend(&mut out, top, &classes);
        let max_count = rows.iter().map(|r| r.count).max().unwrap_or(0) as f64;
        let (x0, x1, y0, y1) = plot_box(top);
        let slot = (x1 - x0) / super::HISTOGRAM_BINS as f64;
        let bar = slot / classes.len().max(1) as f64;
        for r in rows {
            let ci = classes
                .iter()
                .position(|&c| c == r.model_class)
                .unwrap_or(0);
            let h = scale(r.count as f64, 0.0, max_count, 0.0, y0 - y1);
            writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{h:.2}\" fill=\"{}\" fill-opacity=\"0.8\"/>",
                x0 + r.bin_index as f64 * slot + ci as f64 * bar,
                y0 - h,
                bar,
                color(r.model_class)
            )
            .unwrap();
        }
        if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
            writeln!(
                out,
                "<text x=\"{x0}\" y=\"{:.1}\">{:.3e}</text><text x=\"{x1}\" y=\"{:.1}\" text-anchor=\"end\">{:.3e}</text>",
                y0 + 14.0,
                first.bin_low,
                y0 + 14.0,
                last.bin_high
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

pub fn boxplot(rows: &[BoxplotRow]) -> String {
    let mut panels: BTreeMap<(Variant, usize), Vec<&BoxplotRow>> = BTreeMap::new();
    for r in rows {
        panels.entry((r.variant, r.train_size)).or_default().push(r);
    }
    let mut out = open(panels.len());
    for (p, ((variant, size), rows)) in panels.iter().enumerate() {
        let top = p as f64 * PANEL_H;
        frame(
            &mut out,
            top,
            &format!("MSE box plot, variant {variant}, A={size}"),
        );
        let lo = rows.iter().map(|r| r.min).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.max).fold(f64::NEG_INFINITY, f64::max);
        let (x0, x1, y0, y1) = plot_box(top);
        let slot = (x1 - x0) / rows.len() as f64;
        for (i, r) in rows.iter().enumerate() {
            let cx = x0 + (i as f64 + 0.5) * slot;
            let y = |v| scale(v, lo, hi, y0 - 8.0, y1 + 8.0);
            let half = slot * 0.2;
            writeln!(
                out,
                "<g stroke=\"{c}\" fill=\"none\"><line x1=\"{cx:.2}\" y1=\"{:.2}\" x2=\"{cx:.2}\" y2=\"{:.2}\"/><line x1=\"{cx:.2}\" y1=\"{:.2}\" x2=\"{cx:.2}\" y2=\"{:.2}\"/><rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\"/><line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke-width=\"2\"/></g>\n<text x=\"{cx:.2}\" y=\"{:.1}\" text-anchor=\"middle\">{} (n={})</text>",
                y(r.min),
                y(r.q1),
                y(r.q3),
                y(r.max),
                cx - half,
                y(r.q3),
                2.0 * half,
                y(r.q1) - y(r.q3),
                cx - half,
                y(r.median),
                cx + half,
                y(r.median),
                y0 + 14.0,
                r.model_class,
                r.n,
                c = color(r.model_class)
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

fn polyline(points: impl Iterator<Item = (f64, f64)>) -> String {
    points
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn overlay(overlays: &[Overlay]) -> String {
    let mut out = open(overlays.len());
    for (p, o) in overlays.iter().enumerate() {
        let top = p as f64 * PANEL_H;
        frame(
            &mut out,
            top,
            &format!(
                "{} prediction vs truth, variant {}, A={}",
                o.model_class, o.variant, o.train_size
            ),
        );
        let bands = o.bands();
        let all = o
            .truth
            .iter()
            .copied()
            .chain(bands.iter().flat_map(|b| [b.1, b.2]));
        let lo = all.clone().fold(f64::INFINITY, f64::min);
        let hi = all.fold(f64::NEG_INFINITY, f64::max);
        let (x0, x1, y0, y1) = plot_box(top);
        let steps = o.truth.len().saturating_sub(1).max(1) as f64;
        let x = |t: usize| scale(t as f64, 0.0, steps, x0, x1);
        let y = |v: f64| scale(v, lo, hi, y0 - 4.0, y1 + 4.0);
        let upper = bands.iter().enumerate().map(|(t, b)| (x(t), y(b.2)));
        let lower = bands.iter().enumerate().rev().map(|(t, b)| (x(t), y(b.1)));
        let c = color(o.model_class);
        writeln!(
            out,
            "<polygon points=\"{}\" fill=\"{c}\" fill-opacity=\"0.25\" stroke=\"none\"/>\n<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n<polyline points=\"{}\" fill=\"none\" stroke=\"{c}\" stroke-width=\"1\"/>",
            polyline(upper.chain(lower)),
            polyline(o.truth.iter().enumerate().map(|(t, &v)| (x(t), y(v)))),
            polyline(bands.iter().enumerate().map(|(t, b)| (x(t), y(b.0)))),
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}
