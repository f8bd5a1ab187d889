//! Command implementations behind the `billiard` binary.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::catalog::{catalog, render_text};
use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::output::{csv_file_name, to_json, write_csv};
use crate::pipeline::{run_ensemble, Command, PipelineOptions};

#[derive(Debug, Parser)]
#[command(name = "billiard", version, about = "Covector transport and Lyapunov-function checks for semi-dispersing billiards")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Simulate the ensemble, write per-trajectory CSV and a JSON summary.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Interior samples per free segment (overrides the config).
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Run all checks plus the exact adjoint residual; print a JSON report.
    Verify {
        config: PathBuf,
        /// Scale every curvature operator by 2 in the covector map.
        #[arg(long)]
        corrupt_curvature: bool,
    },
    /// List the built-in domains.
    Catalog {
        #[arg(long)]
        json: bool,
    },
}

/// Runs a parsed command; returns the process exit code.
pub fn execute(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        CliCommand::Run { config, out, grid } => cmd_run(&config, out.as_deref(), grid),
        CliCommand::Verify { config, corrupt_curvature } => cmd_verify(&config, corrupt_curvature),
        CliCommand::Catalog { json } => cmd_catalog(json),
    }
}

pub fn cmd_run(config: &Path, out: Option<&Path>, grid: Option<usize>) -> Result<i32, HarnessError> {
    let cfg = ExperimentConfig::load(config)?;
    if grid == Some(0) {
        return Err(HarnessError::Config("--grid must be positive".into()));
    }
    let opts = PipelineOptions { command: Command::Run, grid: grid.unwrap_or(cfg.grid), corrupt_curvature: false };
    let (summary, records) = run_ensemble(&cfg, &opts, true)?;
    let dir = out.map_or_else(|| PathBuf::from(&cfg.output.dir), Path::to_path_buf);
    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    for (i, recs) in records.iter().enumerate() {
        write_csv(&dir.join(csv_file_name(i)), recs)?;
    }
    let summary_path = dir.join(&cfg.output.summary);
    std::fs::write(&summary_path, to_json(&summary)?)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", summary_path.display())))?;
    let e = &summary.ensemble;
    println!(
        "{} trajectories, {} failed checks, {} early singular; exit {}; wrote {}",
        e.trajectories,
        e.violations,
        e.singular_early,
        summary.exit_code,
        dir.display()
    );
    Ok(summary.exit_code)
}

pub fn cmd_verify(config: &Path, corrupt_curvature: bool) -> Result<i32, HarnessError> {
    let cfg = ExperimentConfig::load(config)?;
    let opts = PipelineOptions { command: Command::Verify, grid: cfg.grid, corrupt_curvature };
    let (summary, _) = run_ensemble(&cfg, &opts, false)?;
    print!("{}", to_json(&summary)?);
    Ok(summary.exit_code)
}

pub fn cmd_catalog(json: bool) -> Result<i32, HarnessError> {
    let entries = catalog();
    if json {
        print!("{}", to_json(&entries)?);
    } else {
        print!("{}", render_text(&entries));
    }
    Ok(0)
}
