//! CSV tables and SVG precision/success plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::{mean_scores, success_threshold, EvalSummary, MeanScores, PRECISION_POINTS, SUCCESS_POINTS};
use crate::error::{Error, Result};

pub const RESULTS_CSV: &str = "results.csv";
pub const CURVES_CSV: &str = "curves.csv";
pub const PRECISION_SVG: &str = "precision.svg";
pub const SUCCESS_SVG: &str = "success.svg";

/// One tracker configuration evaluated on one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub sequence: String,
    pub config: String,
    pub summary: EvalSummary,
}

/// A row of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sequence: String,
    pub config: String,
    pub frames: usize,
    pub dp20: f64,
    pub op50: f64,
    pub auc: f64,
    pub fps: f64,
}

impl From<&RunSummary> for ResultRow {
    fn from(r: &RunSummary) -> Self {
        ResultRow {
            sequence: r.sequence.clone(),
            config: r.config.clone(),
            frames: r.summary.series.cle.len(),
            dp20: r.summary.dp_at_20,
            op50: r.summary.op_at_50,
            auc: r.summary.auc,
            fps: r.summary.fps,
        }
    }
}

/// A row of `curves.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub config: String,
    pub kind: String,
    pub threshold: f64,
    pub value: f64,
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

pub fn from_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    from_csv(path)
}

pub fn read_curves(path: &Path) -> Result<Vec<CurveRow>> {
    from_csv(path)
}

/// Mean scores per configuration, in first-appearance order.
pub fn by_config(runs: &[RunSummary]) -> Result<Vec<(String, MeanScores)>> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<&EvalSummary>> = BTreeMap::new();
    for r in runs {
        if !groups.contains_key(&r.config) {
            order.push(r.config.clone());
        }
        groups.entry(r.config.clone()).or_default().push(&r.summary);
    }
    order
        .into_iter()
        .map(|c| {
            let m = mean_scores(groups[&c].iter().copied())?;
            Ok((c, m))
        })
        .collect()
}

/// Writes results.csv, curves.csv, precision.svg and success.svg into `dir`.
pub fn emit_report(runs: &[RunSummary], dir: &Path) -> Result<()> {
    if runs.is_empty() {
        return Err(Error::EmptySeries);
    }
    fs::create_dir_all(dir)?;
    let rows: Vec<ResultRow> = runs.iter().map(ResultRow::from).collect();
    write_atomic(&dir.join(RESULTS_CSV), &to_csv(&rows)?)?;

    let configs = by_config(runs)?;
    let mut curves = Vec::new();
    for (name, m) in &configs {
        for (t, v) in m.precision_curve.iter().enumerate() {
            curves.push(CurveRow {
                config: name.clone(),
                kind: "precision".into(),
                threshold: t as f64,
                value: *v,
            });
        }
        for (i, v) in m.success_curve.iter().enumerate() {
            curves.push(CurveRow {
                config: name.clone(),
                kind: "success".into(),
                threshold: success_threshold(i),
                value: *v,
            });
        }
    }
    write_atomic(&dir.join(CURVES_CSV), &to_csv(&curves)?)?;

    let precision: Vec<Curve> = configs
        .iter()
        .map(|(n, m)| Curve {
            label: format!("{n} [{:.3}]", m.dp_at_20),
            points: (0..PRECISION_POINTS).map(|t| (t as f64, m.precision_curve[t])).collect(),
        })
        .collect();
    let success: Vec<Curve> = configs
        .iter()
        .map(|(n, m)| Curve {
            label: format!("{n} [{:.3}]", m.auc),
            points: (0..SUCCESS_POINTS).map(|i| (success_threshold(i), m.success_curve[i])).collect(),
        })
        .collect();
    write_atomic(
        &dir.join(PRECISION_SVG),
        plot_svg("Precision plots of OPE", "Location error threshold (px)", 50.0, &precision).as_bytes(),
    )?;
    write_atomic(
        &dir.join(SUCCESS_SVG),
        plot_svg("Success plots of OPE", "Overlap threshold", 1.0, &success).as_bytes(),
    )?;
    Ok(())
}

pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 8] = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Self-contained SVG line plot with y in [0, 1] and x in [0, x_max].
pub fn plot_svg(title: &str, x_label: &str, x_max: f64, curves: &[Curve]) -> String {
    let (w, h) = (480.0, 360.0);
    let (left, right, top, bottom) = (60.0, 20.0, 40.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let px = |x: f64| left + x / x_max * pw;
    let py = |y: f64| top + (1.0 - y) * ph;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{:.1}</text>"#,
            left - 6.0,
            py(f) + 4.0,
            f
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            px(f * x_max),
            top + ph + 16.0,
            trim(f * x_max)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 12.0,
        escape(x_label)
    );
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = c.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = top + ph - 10.0 - 16.0 * (curves.len() - 1 - i) as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            left + pw - 150.0,
            left + pw - 130.0,
            left + pw - 125.0,
            ly + 4.0,
            escape(&c.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn trim(v: f64) -> String {
    let t = format!("{v:.2}");
    t.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::metrics::{summarize, Series};

    fn run(seq: &str, config: &str, cle: Vec<f64>, iou: Vec<f64>) -> RunSummary {
        RunSummary {
            sequence: seq.into(),
            config: config.into(),
            summary: summarize(&Series { cle, iou, fps: 31.7 }).unwrap(),
        }
    }

    #[test]
    fn one_summary_one_row_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = run("a", "full", vec![1.0, 21.0, 3.3], vec![0.9, 0.1, 1.0 / 3.0]);
        emit_report(std::slice::from_ref(&r), dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join(RESULTS_CSV)).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap(), "sequence,config,frames,dp20,op50,auc,fps");
        let back = read_results(&dir.path().join(RESULTS_CSV)).unwrap();
        assert_eq!(back, vec![ResultRow::from(&r)]);
        assert_eq!(back[0].auc.to_bits(), r.summary.auc.to_bits());
        let curves = read_curves(&dir.path().join(CURVES_CSV)).unwrap();
        assert_eq!(curves.len(), PRECISION_POINTS + SUCCESS_POINTS);
        assert!(!dir.path().join("results.csv.tmp").exists());
    }

    #[test]
    fn two_configs_two_polylines() {
        let dir = tempfile::tempdir().unwrap();
        let runs = vec![
            run("a", "full", vec![1.0], vec![0.9]),
            run("a", "baseline", vec![40.0], vec![0.2]),
        ];
        emit_report(&runs, dir.path()).unwrap();
        for name in [PRECISION_SVG, SUCCESS_SVG] {
            let svg = fs::read_to_string(dir.path().join(name)).unwrap();
            assert_eq!(svg.matches("<polyline").count(), 2);
        }
        let svg = fs::read_to_string(dir.path().join(PRECISION_SVG)).unwrap();
        assert!(svg.contains("full [1.000]"));
        assert!(svg.contains("baseline [0.000]"));
        assert!(matches!(emit_report(&[], dir.path()), Err(Error::EmptySeries)));
    }
}
