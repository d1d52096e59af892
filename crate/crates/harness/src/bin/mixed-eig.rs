use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mixed_eig::{run, ExperimentConfig, Subcommand};

/// First eigenvalues of the mixed local-nonlocal p-Laplacian on lattice
/// domains, with polarization and Schwarz experiments.
#[derive(Debug, Parser)]
#[command(name = "mixed-eig", version)]
struct Cli {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// Flat `section.key = value` config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write an SVG plot.
    #[arg(long)]
    plot: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match ExperimentConfig::from_file_seeded(&cli.config, cli.seed) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli.subcommand, &cfg, &cli.out, cli.plot) {
        Ok((report, written)) => {
            for c in report.failed_checks() {
                eprintln!("violated: {} (margin {:e}): {}", c.name, c.margin, c.detail);
            }
            for path in [written.csv, written.json, written.svg].into_iter().flatten() {
                println!("wrote {}", path.display());
            }
            println!("status: {:?}", report.status);
            ExitCode::from(report.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
