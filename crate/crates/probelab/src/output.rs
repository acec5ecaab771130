//! Report serialization, CSV and markdown tables, and SVG scatter plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use probelab_core::eval::{NormMethod, Summary};
use probelab_core::Report;
use serde::Serialize;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_report(path: &Path) -> Result<Report> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not a report", path.display()))
}

fn norm_name(norm: NormMethod) -> &'static str {
    match norm {
        NormMethod::Burns => "burns",
        NormMethod::Cluster => "cluster",
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-fit accuracies, one column per method named `<norm>_<method>`.
/// `raw` selects raw instead of flip-corrected accuracy.
pub fn accuracy_csv(report: &Report, raw: bool) -> Result<String> {
    let norm = norm_name(report.config.norm);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["fit".to_string()];
    header.extend(
        report
            .methods
            .iter()
            .map(|m| format!("{norm}_{}", m.method.as_str())),
    );
    w.write_record(&header)?;
    let fits = report.methods.first().map_or(0, |m| m.fits.len());
    for f in 0..fits {
        let mut row = vec![f.to_string()];
        for m in &report.methods {
            let r = &m.fits[f];
            row.push(opt(if raw { r.raw_accuracy } else { r.accuracy }));
        }
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn write_accuracy_csvs(report: &Report, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (name, raw) in [("accuracy.csv", false), ("raw_accuracy.csv", true)] {
        let path = dir.join(name);
        fs::write(&path, accuracy_csv(report, raw)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub report: String,
    pub norm: &'static str,
    pub method: &'static str,
    pub fits: usize,
    pub failures: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub min: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<f64>,
    pub raw_mean: Option<f64>,
}

pub fn summary_rows(reports: &[(String, Report)]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for (name, report) in reports {
        for m in &report.methods {
            let s: Option<&Summary> = m.accuracy.as_ref();
            rows.push(SummaryRow {
                report: name.clone(),
                norm: norm_name(report.config.norm),
                method: m.method.as_str(),
                fits: m.fits.len(),
                failures: m.failures,
                mean: s.map(|s| s.mean),
                std: s.map(|s| s.std),
                min: s.map(|s| s.min),
                median: s.map(|s| s.median),
                max: s.map(|s| s.max),
                raw_mean: m.raw_accuracy.map(|s| s.mean),
            });
        }
    }
    rows
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn summary_markdown(rows: &[SummaryRow]) -> String {
    let cell = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"));
    let mut out = String::from(
        "| report | norm | method | fits | failures | mean | std | min | median | max | raw mean |\n\
         |---|---|---|---:|---:|---:|---:|---:|---:|---:|---:|\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            r.report,
            r.norm,
            r.method,
            r.fits,
            r.failures,
            cell(r.mean),
            cell(r.std),
            cell(r.min),
            cell(r.median),
            cell(r.max),
            cell(r.raw_mean)
        );
    }
    out
}

const SIZE: f64 = 480.0;
const MARGIN: f64 = 48.0;
/// Label 0 then label 1, each as (dark, light).
const COLOURS: [(&str, &str); 2] = [("#1f5fa8", "#8fb8e6"), ("#d95f02", "#fdb97d")];
const UNLABELLED: (&str, &str) = ("#333333", "#aaaaaa");

/// Scatter plot of `(xs[i], ys[i])`. Points are coloured by label and drawn
/// dark or light by shade category (categories sorted, alternating).
pub fn scatter_svg(
    xs: &[f64],
    ys: &[f64],
    labels: Option<&[u8]>,
    shade: Option<&[String]>,
    x_name: &str,
    y_name: &str,
) -> String {
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 1.0, lo + 1.0)
        }
    };
    let (x0, x1) = range(xs);
    let (y0, y1) = range(ys);
    let inner = SIZE - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * inner;
    let py = |y: f64| SIZE - MARGIN - (y - y0) / (y1 - y0) * inner;

    let categories: BTreeMap<&str, usize> = shade
        .map(|s| {
            let mut keys: Vec<&str> = s.iter().map(String::as_str).collect();
            keys.sort_unstable();
            keys.dedup();
            keys.into_iter().enumerate().map(|(i, k)| (k, i)).collect()
        })
        .unwrap_or_default();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{inner}" height="{inner}" fill="none" stroke="grey"/>"#
    );
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        let pair = match labels {
            Some(l) => COLOURS[usize::from(l[i] == 1)],
            None => UNLABELLED,
        };
        let light = shade.is_some_and(|s| categories[s[i].as_str()] % 2 == 1);
        let fill = if light { pair.1 } else { pair.0 };
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{fill}" fill-opacity="0.8"/>"#,
            px(x),
            py(y)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">{x_name}</text>"#,
        SIZE / 2.0,
        SIZE - 14.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 16 {})">{y_name}</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    );
    svg.push_str("</svg>\n");
    svg
}
