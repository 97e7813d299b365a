use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qeeg_cli::config::Overrides;
use qeeg_cli::{commands, CliError, Outcome, StudyConfig};

/// Forehead qEEG treatment-response pipeline.
#[derive(Parser)]
#[command(name = "qeeg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Study config (JSON). Missing keys take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate a synthetic cohort with manifest.
    Simulate,
    /// Filter, estimate spectra and write the feature table.
    Features,
    /// Responder comparisons at baseline and baseline-to-post changes.
    Stats,
    /// Classifier grid with 3-fold and leave-one-subject-out evaluation.
    Predict,
    /// Cohort HDRS summary.
    Report,
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let base = match &cli.common.config {
        Some(p) => StudyConfig::load(p)?,
        None => StudyConfig::default(),
    };
    let cfg = base.resolve(&Overrides {
        seed: cli.common.seed,
        output_dir: cli.common.out.clone(),
    })?;
    match cli.command {
        Command::Simulate => commands::simulate::run(&cfg),
        Command::Features => commands::features::run(&cfg),
        Command::Stats => commands::stats::run(&cfg),
        Command::Predict => commands::predict::run(&cfg),
        Command::Report => commands::report::run(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(outcome) => {
            if outcome.failures > 0 {
                eprintln!("completed with {} failure(s); see the error report in the output directory", outcome.failures);
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
