//! Batch front end for `rpfkit-core`: reads a model file, runs one command and
//! writes a JSON report plus CSV tables.

pub mod commands;
pub mod input;
pub mod report;

use std::path::PathBuf;

use rpfkit_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Core(#[from] Error),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    /// 2 parse/validation, 3 numerical non-convergence, 4 hypothesis violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                Error::NoConvergence { .. } | Error::NumericalOverflow(_) => 3,
                Error::NotIrreducible
                | Error::EmptyRowOrColumn { .. }
                | Error::NonPrimitiveBlock
                | Error::PeriodicModel { .. }
                | Error::NonPositiveCandidate
                | Error::NonInvariantTrial { .. }
                | Error::NonAggregableTail(_)
                | Error::SectionNotIrreducible { .. }
                | Error::KernelNotBuilt
                | Error::EigendataMissing => 4,
                _ => 2,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Eigen,
    Thermo,
    Zerotemp,
    Involution,
    Cms,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eigen => "eigen",
            Command::Thermo => "thermo",
            Command::Zerotemp => "zerotemp",
            Command::Involution => "involution",
            Command::Cms => "cms",
        }
    }
}

/// Command-line overrides of the `run` section.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub depth: Option<usize>,
    pub t_list: Option<Vec<f64>>,
    pub method: Option<String>,
    pub out: Option<PathBuf>,
}

/// Parse `"1,2,5.5"`.
pub fn parse_t_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect()
}

/// Run one command; the report is written to `--out` (CSV tables next to it)
/// or printed. Returns the process exit status.
pub fn run(command: Command, model_path: &std::path::Path, overrides: &Overrides) -> i32 {
    match commands::execute(command, model_path, overrides) {
        Ok(outcome) => {
            if let Err(e) = report::emit(&outcome, overrides.out.as_deref()) {
                eprintln!("rpfkit: {e}");
                return e.exit_code();
            }
            match &outcome.deferred_error {
                Some(e) => {
                    eprintln!("rpfkit: {e}");
                    e.exit_code()
                }
                None => 0,
            }
        }
        Err(e) => {
            eprintln!("rpfkit: {e}");
            e.exit_code()
        }
    }
}
