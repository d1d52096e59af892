#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Experiment harness for the mixed local-nonlocal eigenvalue lab: flat
//! config files, experiment drivers, CSV/JSON/SVG reports and the
//! randomized validation battery.

pub mod config;
pub mod domain;
pub mod error;
pub mod experiments;
pub mod report;
pub mod validate;

use std::path::Path;

use clap::ValueEnum;
use mixed_eig_core::par;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use report::{Check, Report, ReportRow, Status, Written};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Subcommand {
    Eig,
    PolarizeSet,
    PolarizeFn,
    Schwarz,
    AnnulusSweep,
    FkPolarization,
    FkClassical,
    Validate,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Self::Eig => "eig",
            Self::PolarizeSet => "polarize-set",
            Self::PolarizeFn => "polarize-fn",
            Self::Schwarz => "schwarz",
            Self::AnnulusSweep => "annulus-sweep",
            Self::FkPolarization => "fk-polarization",
            Self::FkClassical => "fk-classical",
            Self::Validate => "validate",
        }
    }
}

/// Runs one experiment on the configured number of workers.
pub fn execute(cmd: Subcommand, cfg: &ExperimentConfig) -> Result<Report> {
    par::with_workers(cfg.workers, || match cmd {
        Subcommand::Eig => experiments::run_eig(cfg),
        Subcommand::PolarizeSet => experiments::run_polarize_set(cfg),
        Subcommand::PolarizeFn => experiments::run_polarize_fn(cfg),
        Subcommand::Schwarz => experiments::run_schwarz(cfg),
        Subcommand::AnnulusSweep => experiments::run_annulus_sweep(cfg),
        Subcommand::FkPolarization => experiments::run_fk_polarization(cfg),
        Subcommand::FkClassical => experiments::run_fk_classical(cfg),
        Subcommand::Validate => validate::run_validate(cfg),
    })
}

/// Points for the optional plot: the sweep curve, the Schwarz distance
/// sequence, or λ per row.
fn plot_points(report: &Report) -> (&'static str, &'static str, Vec<(f64, f64)>) {
    let pairs = |key: &str| report.extra.get(key).and_then(|v| serde_json::from_value::<Vec<(f64, f64)>>(v.clone()).ok());
    let list = |key: &str| report.extra.get(key).and_then(|v| serde_json::from_value::<Vec<f64>>(v.clone()).ok());
    if let Some(curve) = pairs("curve") {
        return ("t", "lambda", curve);
    }
    if let Some(d) = list("distances") {
        return ("iteration", "distance", d.into_iter().enumerate().map(|(k, v)| (k as f64, v)).collect());
    }
    let pts = report.rows.iter().enumerate().filter_map(|(k, r)| r.lambda.map(|l| (k as f64, l))).collect();
    ("row", "lambda", pts)
}

/// Writes the outputs enabled in `output.*` (plus the plot when `plot` is
/// set) into `out`, named after `output.name` or the subcommand.
pub fn write_outputs(cmd: Subcommand, cfg: &ExperimentConfig, report: &Report, out: &Path, plot: bool) -> Result<Written> {
    std::fs::create_dir_all(out)?;
    let stem = cfg.output.name.clone().unwrap_or_else(|| cmd.name().to_string());
    let mut written = Written::default();
    if cfg.output.csv {
        let path = out.join(format!("{stem}.csv"));
        report::write_csv(&report.rows, &path)?;
        written.csv = Some(path);
    }
    if cfg.output.json {
        let path = out.join(format!("{stem}.json"));
        report::write_json(report, &path)?;
        written.json = Some(path);
    }
    if plot || cfg.output.plot {
        let (xl, yl, pts) = plot_points(report);
        let path = out.join(format!("{stem}.svg"));
        std::fs::write(&path, report::svg_line_plot(cmd.name(), xl, yl, &pts))?;
        written.svg = Some(path);
    }
    Ok(written)
}

/// Runs `cmd` and writes its outputs.
pub fn run(cmd: Subcommand, cfg: &ExperimentConfig, out: &Path, plot: bool) -> Result<(Report, Written)> {
    let report = execute(cmd, cfg)?;
    let written = write_outputs(cmd, cfg, &report, out, plot)?;
    Ok((report, written))
}
