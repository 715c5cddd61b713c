//! File formats: curve JSON, trajectory JSON lines, diagnostics CSV, reports.
//!
//! Curves are stored open: `N` points with implicit closure, the first point
//! is not repeated.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::analysis::DiagnosticsReport;
use crate::curve::{DiscreteCurve, MIN_SAMPLES};
use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::vec2::Vec2;

pub const TRAJECTORY_FILE: &str = "trajectory.jsonl";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CSV_HEADER: &str = "t,length,sup_norm,min_speed,min_curvature";

/// Parse `{"points": [[x, y], ...]}`. `source` names the input in errors.
pub fn parse_curve(text: &str, source: &str) -> Result<DiscreteCurve> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Error::input(source, format!("malformed JSON: {e}")))?;
    let points = value
        .get("points")
        .ok_or_else(|| Error::input(source, "missing key \"points\""))?
        .as_array()
        .ok_or_else(|| Error::input(source, "\"points\" must be an array"))?;
    if points.len() < MIN_SAMPLES {
        return Err(Error::input(
            source,
            format!("need at least {MIN_SAMPLES} points, got {}", points.len()),
        ));
    }
    let mut out = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let pair = p
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| Error::input(source, format!("points[{i}]: expected an [x, y] pair, got {p}")))?;
        let coord = |c: &Value| c.as_f64().filter(|v| v.is_finite());
        match (coord(&pair[0]), coord(&pair[1])) {
            (Some(x), Some(y)) => out.push(Vec2::new(x, y)),
            _ => {
                return Err(Error::input(
                    source,
                    format!("points[{i}]: coordinates must be finite numbers, got {p}"),
                ))
            }
        }
    }
    DiscreteCurve::new(out).map_err(|e| Error::input(source, e.to_string()))
}

pub fn read_curve(path: &Path) -> Result<DiscreteCurve> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_curve(&text, &path.display().to_string())
}

#[derive(Serialize)]
struct CurveFile<'a> {
    points: &'a [[f64; 2]],
}

pub fn curve_to_json(curve: &DiscreteCurve) -> String {
    let pts: Vec<[f64; 2]> = curve.points().iter().map(|p| p.to_array()).collect();
    serde_json::to_string(&CurveFile { points: &pts }).expect("finite coordinates serialize")
}

pub fn write_curve(curve: &DiscreteCurve, path: &Path) -> Result<()> {
    write_text(path, &curve_to_json(curve))
}

#[derive(Serialize)]
struct Record {
    t: f64,
    length: f64,
    sup_norm: f64,
    min_speed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_curvature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<Vec<[f64; 2]>>,
}

/// JSON lines, one record per stored state. Point data is attached to every
/// `points_every`-th record and to the final one; `0` omits it.
pub fn trajectory_jsonl(traj: &Trajectory, points_every: usize) -> String {
    let last = traj.states.len().saturating_sub(1);
    let mut out = String::new();
    for (k, (s, d)) in traj.states.iter().zip(&traj.diagnostics).enumerate() {
        let with_points = points_every > 0 && (k % points_every == 0 || k == last);
        let rec = Record {
            t: s.t,
            length: d.length,
            sup_norm: d.sup_norm,
            min_speed: d.min_speed,
            min_curvature: d.min_curvature,
            points: with_points.then(|| s.curve.points().iter().map(|p| p.to_array()).collect()),
        };
        out.push_str(&serde_json::to_string(&rec).expect("finite record serializes"));
        out.push('\n');
    }
    out
}

/// Diagnostics as CSV with header [`CSV_HEADER`]; a missing curvature is an
/// empty field.
pub fn diagnostics_csv(traj: &Trajectory) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (s, d) in traj.states.iter().zip(&traj.diagnostics) {
        let k = d.min_curvature.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{},{}\n", s.t, d.length, d.sup_norm, d.min_speed, k));
    }
    out
}

/// Write the JSON-lines trajectory and the CSV mirror into `dir`.
pub fn write_trajectory(traj: &Trajectory, dir: &Path, points_every: usize) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let jsonl = dir.join(TRAJECTORY_FILE);
    let csv = dir.join(DIAGNOSTICS_FILE);
    write_text(&jsonl, &trajectory_jsonl(traj, points_every))?;
    write_text(&csv, &diagnostics_csv(traj))?;
    Ok((jsonl, csv))
}

pub fn write_report(report: &DiagnosticsReport, path: &Path, include_timings: bool) -> Result<()> {
    let mut text = report.to_json(include_timings);
    text.push('\n');
    write_text(path, &text)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidArgument(format!("cannot serialize: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
