//! `iqvi`: command-line workbench around the solver library. One JSON run
//! spec in, a directory of artifacts (reports, logs, plots, manifest) out.
//!
//! Exit codes: 0 success, 2 validation error, 3 numeric failure or
//! divergence, 4 regime violation (a run outside the certified parameter
//! windows; artifacts are still written). Plain I/O failures exit 1.

mod plot;
mod run;
mod spec;

use clap::{Parser, Subcommand};
use std::fs;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("spec validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("regime violation: {0}")]
    RegimeViolation(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) | Self::Usage(_) => 2,
            Self::NumericFailure(_) => 3,
            Self::RegimeViolation(_) => 4,
            Self::Io(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "iqvi",
    version,
    about = "Workbench for inverse quasi-variational inequality problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to a JSON run spec (optional only for `reproduce`).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,

    /// Output directory root; overrides the spec and IQVI_OUT_DIR.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the sampling seed used by `certify`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Suppress per-artifact progress lines on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Evaluate the existence, stability, and discrete-window conditions.
    Check,
    /// Integrate the continuous flow from the spec's starting points.
    SolveOde,
    /// Run the explicit projection iteration.
    SolveIter,
    /// Run the fixed-point iteration on the contraction map.
    SolveBanach,
    /// Run the constant-set iteration.
    SolveHe,
    /// Sample a certificate for a candidate solution.
    Certify,
    /// Re-run the two bundled instances and compare against stored results.
    Reproduce,
}

impl Command {
    fn mode_name(self) -> &'static str {
        match self {
            Self::Check => "check",
            Self::SolveOde => "solve-ode",
            Self::SolveIter => "solve-iter",
            Self::SolveBanach => "solve-banach",
            Self::SolveHe => "solve-he",
            Self::Certify => "certify",
            Self::Reproduce => "reproduce",
        }
    }
}

fn resolve_out_dir(flag: Option<PathBuf>, from_spec: &Option<String>) -> PathBuf {
    if let Some(p) = flag {
        return p;
    }
    if let Some(d) = from_spec {
        return PathBuf::from(d);
    }
    if let Ok(env) = std::env::var("IQVI_OUT_DIR") {
        if !env.is_empty() {
            return PathBuf::from(env);
        }
    }
    PathBuf::from("iqvi-out")
}

fn real_main(cli: Cli) -> Result<(), CliError> {
    let expected = cli.command.mode_name();
    let vspec = match (&cli.command, &cli.spec) {
        (Command::Reproduce, None) => spec::parse_spec(r#"{"mode": "reproduce"}"#)?,
        (_, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
            spec::parse_spec(&text)?
        }
        (_, None) => {
            return Err(CliError::Usage(
                "--spec <FILE> is required for this subcommand".into(),
            ))
        }
    };
    if vspec.mode.name() != expected {
        return Err(CliError::Validation(vec![format!(
            "/mode: spec mode {:?} does not match subcommand {:?}",
            vspec.mode.name(),
            expected
        )]));
    }
    let root = resolve_out_dir(cli.out, &vspec.output.directory);
    let mut writer = run::Writer::new(root, cli.quiet);
    let outcome = run::execute(&vspec, &mut writer, cli.seed)?;
    writer.finish()?;
    outcome.into_result()
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = real_main(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
