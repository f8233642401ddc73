//! Scenario runner: configuration, grids, output files and run manifests.

pub mod config;
pub mod grid;
pub mod output;
pub mod scenarios;

use std::fs;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use config::RunConfig;
use output::Manifest;

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Numerical(#[from] superchain::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(e) if e.is_config_error() => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// How a completed run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    /// Outputs were written but some points were censored or failed.
    Partial,
}

impl RunStatus {
    pub fn exit_code(self) -> u8 {
        match self {
            RunStatus::Ok => 0,
            RunStatus::Partial => 4,
        }
    }
}

/// Runs one scenario, writing its outputs and `run.json` into the output
/// directory. The manifest is written on failure too.
pub fn execute(cfg: &RunConfig) -> Result<RunStatus, CliError> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let clock = Instant::now();

    let result = scenarios::run_scenario(cfg).map_err(CliError::from);
    let (status, error, warnings, written) = match result {
        Ok(outputs) => {
            let warnings = outputs.warnings.clone();
            let written = outputs.write(dir)?;
            let status = if warnings.is_empty() { RunStatus::Ok } else { RunStatus::Partial };
            (Ok(status), None, warnings, written)
        }
        Err(e) => {
            let msg = e.to_string();
            (Err(e), Some(msg), Vec::new(), Vec::new())
        }
    };
    let label = match &status {
        Ok(RunStatus::Ok) => "ok",
        Ok(RunStatus::Partial) => "partial",
        Err(_) => "failed",
    };
    Manifest {
        manifest_version: MANIFEST_VERSION,
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        status: label,
        error,
        warnings: &warnings,
        outputs: &written,
        started_unix: started,
        wall_seconds: clock.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
    }
    .write(dir)?;
    status
}
