//! Report rows, checks, and their CSV, JSON and SVG renderings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One solve (or one rearrangement step). Columns are fixed; fields that do
/// not apply to an experiment are left empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    /// Index of the case within the run.
    pub case: usize,
    pub domain: String,
    /// Sweep value, polarizer, or iteration.
    pub param: String,
    /// Which member of a comparison this row is (`omega`, `polarized`, `ball`, ...).
    pub role: String,
    pub nodes: usize,
    pub lambda: Option<f64>,
    pub local_energy: Option<f64>,
    pub nonlocal_energy: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub residual: Option<f64>,
    pub interior_min: Option<f64>,
    /// `‖u_k - u*‖_p` for Schwarz rows.
    pub distance: Option<f64>,
    /// Relative eigenvalue gap against the comparison partner.
    pub gap: Option<f64>,
    /// Witness set sizes `|A_H|`, `|B_H|`.
    pub a_h: Option<usize>,
    pub b_h: Option<usize>,
    /// Only filled when timings are requested, so reports stay reproducible.
    pub wall_time_s: Option<f64>,
}

impl ReportRow {
    pub fn new(experiment: &str, case: usize, domain: &str, param: impl Into<String>, role: &str) -> Self {
        Self { experiment: experiment.into(), case, domain: domain.into(), param: param.into(), role: role.into(), ..Self::default() }
    }
}

/// An asserted property with its raw margin (`margin ≥ 0` means it holds).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub detail: String,
}

impl Check {
    /// Passes iff `margin ≥ 0`.
    pub fn margin(name: impl Into<String>, margin: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: margin >= 0.0, margin, detail: detail.into() }
    }

    pub fn flag(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, margin: if passed { 0.0 } else { -1.0 }, detail: detail.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    NonConvergence,
    Violation,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Ok => 0,
            Self::NonConvergence => 2,
            Self::Violation => 3,
        }
    }
}

/// Everything one run produces; serialized as the JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub seed: u64,
    pub status: Status,
    pub rows: Vec<ReportRow>,
    pub checks: Vec<Check>,
    /// Experiment-specific data (distance sequences, counterexamples, ...).
    pub extra: serde_json::Value,
}

impl Report {
    /// Non-convergence in any solved row outranks failed checks: checks on
    /// unconverged values are not meaningful.
    pub fn new(experiment: &str, seed: u64, rows: Vec<ReportRow>, checks: Vec<Check>, extra: serde_json::Value) -> Self {
        let status = if rows.iter().any(|r| r.converged == Some(false)) {
            Status::NonConvergence
        } else if checks.iter().any(|c| !c.passed) {
            Status::Violation
        } else {
            Status::Ok
        };
        Self { experiment: experiment.into(), seed, status, rows, checks, extra }
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub fn write_csv(rows: &[ReportRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        // serde only writes the header alongside the first record
        w.write_record(CSV_HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

pub const CSV_HEADER: [&str; 18] = [
    "experiment",
    "case",
    "domain",
    "param",
    "role",
    "nodes",
    "lambda",
    "local_energy",
    "nonlocal_energy",
    "iterations",
    "converged",
    "residual",
    "interior_min",
    "distance",
    "gap",
    "a_h",
    "b_h",
    "wall_time_s",
];

pub fn write_json(report: &Report, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// A single polyline of `(x, y)` points with axis labels and min/max ticks.
pub fn svg_line_plot(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 60.0;
    let finite: Vec<(f64, f64)> = points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    let span = |vals: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo < hi {
            (lo, hi)
        } else if lo.is_finite() {
            (lo - 0.5, lo + 0.5)
        } else {
            (0.0, 1.0)
        }
    };
    let (x0, x1) = span(&mut finite.iter().map(|p| p.0));
    let (y0, y1) = span(&mut finite.iter().map(|p| p.1));
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(s, r#"<line x1="{M}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, H - M, W - M, H - M);
    let _ = writeln!(s, r#"<line x1="{M}" y1="{M}" x2="{M}" y2="{}" stroke="black"/>"#, H - M);
    for (x, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="{anchor}" font-family="sans-serif" font-size="11">{}</text>"#, sx(x), H - M + 16.0, fmt_tick(x));
    }
    for y in [y0, y1] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#, M - 6.0, sy(y) + 4.0, fmt_tick(y));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#, W / 2.0, H - 16.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    let path: Vec<String> = finite.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let _ = writeln!(s, r#"<polyline fill="none" stroke="steelblue" stroke-width="2" points="{}"/>"#, path.join(" "));
    for &(x, y) in &finite {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, sx(x), sy(y));
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e4) {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Paths of the files a run writes into `dir`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Written {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let mut a = ReportRow::new("eig", 0, "ball", "", "omega");
        a.lambda = Some(0.1 + 0.2);
        a.converged = Some(true);
        a.interior_min = Some(1e-300);
        let mut b = ReportRow::new("schwarz", 1, "blob, odd \"name\"", "3", "step");
        b.distance = Some(std::f64::consts::PI);
        b.a_h = Some(4);
        let rows = vec![a, b];
        write_csv(&rows, &path).unwrap();
        assert_eq!(read_csv(&path).unwrap(), rows);
        let header = std::fs::read_to_string(&path).unwrap();
        assert_eq!(header.lines().next().unwrap(), CSV_HEADER.join(","));
    }

    #[test]
    fn empty_csv_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        write_csv(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().trim(), CSV_HEADER.join(","));
    }

    #[test]
    fn status_precedence() {
        let mut row = ReportRow::new("eig", 0, "d", "", "omega");
        row.converged = Some(false);
        let bad = Check::margin("x", -1.0, "");
        assert_eq!(Report::new("e", 0, vec![row.clone()], vec![bad.clone()], serde_json::Value::Null).status, Status::NonConvergence);
        row.converged = Some(true);
        assert_eq!(Report::new("e", 0, vec![row], vec![bad], serde_json::Value::Null).status, Status::Violation);
    }

    #[test]
    fn svg_is_well_formed_text() {
        let s = svg_line_plot("λ vs t", "t", "lambda", &[(0.0, 3.0), (0.5, 2.0), (1.0, f64::NAN)]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<circle").count(), 2);
    }
}
