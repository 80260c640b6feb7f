use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod pipeline;
mod plot;
mod reference;

use config::ExperimentConfig;
use error::CliError;

/// Fair knowledge distillation experiments on attributed graphs.
#[derive(Debug, Parser)]
#[command(name = "fairdistill", version)]
struct Cli {
    /// TOML config, or a JSON manifest from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Run only this seed instead of the configured list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Leave timestamps and wall times out of SVGs and manifests.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one teacher per seed and write checkpoints.
    TrainTeacher,
    /// Distill the saved teachers with the configured method.
    Distill,
    /// Distill over a grid of lambda or proxy_dim values.
    Sweep,
    /// Compare vanilla, proxy-only and full distillation.
    Ablate,
    /// Write the configured synthetic graph as CSV.
    Synth,
    /// Re-render plots from a sweep or report CSV.
    Report {
        /// CSV written by `sweep` or `ablate`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Print the configuration reference in Markdown.
    ConfigReference,
}

pub struct Context {
    pub config: ExperimentConfig,
    pub out: PathBuf,
    pub deterministic: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Command::ConfigReference = cli.command {
        print!("{}", reference::markdown());
        return Ok(());
    }
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.run.seeds = vec![seed];
    }
    config.validate()?;
    for w in config.warnings() {
        eprintln!("warning: {w}");
    }
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| error::runtime(anyhow::anyhow!("cannot create {}: {e}", cli.out.display())))?;
    let ctx = Context { config, out: cli.out, deterministic: cli.deterministic };
    match cli.command {
        Command::TrainTeacher => commands::train_teacher(&ctx),
        Command::Distill => commands::distill(&ctx),
        Command::Sweep => commands::sweep(&ctx),
        Command::Ablate => commands::ablate(&ctx),
        Command::Synth => commands::synth(&ctx),
        Command::Report { input } => commands::report(&ctx, &input),
        Command::ConfigReference => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
