use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

mod commands;
mod config;
mod error;
mod output;
mod sweep;

use commands::{Command, Context};
use config::ExperimentConfig;
use error::CliError;
use output::{manifest_config, write_run, RunInfo, RunManifest};

/// Experiments for the Wick-ordered stochastic cubic Schrödinger equation on
/// the circle.
#[derive(Debug, Parser)]
#[command(name = "wickns", version)]
struct Cli {
    command: Command,
    /// Experiment config (TOML); for `rerun`, a manifest.json instead.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config and WICKNS_OUT.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Exit with status 3 when any check of the run fails.
    #[arg(long)]
    assert: bool,
}

fn load(cli: &Cli) -> Result<(Command, ExperimentConfig, PathBuf), CliError> {
    let (command, path, seed) = if cli.command == Command::Rerun {
        let manifest = RunManifest::load(&cli.config)?;
        (Command::from_name(&manifest.command)?, manifest_config(&cli.config, &manifest), None)
    } else {
        (cli.command, cli.config.clone(), cli.seed)
    };
    let cfg = ExperimentConfig::load(&path)?;
    if let Some(named) = &cfg.command {
        if *named != command.name() {
            return Err(CliError::Config(format!(
                "config is for {named:?} but {:?} was requested",
                command.name()
            )));
        }
    }
    let base = path.parent().map(PathBuf::from).unwrap_or_default();
    let cfg = cfg.absolutize(&base).resolve(seed, cli.out.clone());
    Ok((command, cfg, base))
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let (command, cfg, base) = load(cli)?;
    let ctx = Context {
        workers: cli.workers,
        base,
    };
    let dir = cfg.output_dir.clone();
    if command == Command::Sweep {
        let ok = sweep::run_sweep(&cfg, &ctx, &dir)?;
        return if cli.assert && !ok {
            Err(CliError::Assert("a sweep cell failed its checks".into()))
        } else {
            Ok(())
        };
    }
    let start = Instant::now();
    let result = commands::run(command, &cfg, &ctx);
    if let Err(CliError::Config(_)) = &result {
        return result.map(|_| ());
    }
    let info = RunInfo {
        command,
        config: &cfg,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    write_run(&dir, &info, result.as_ref())?;
    let outcome = result?;
    if let Some(f) = outcome.failure {
        return Err(CliError::Runtime(f));
    }
    let failed: Vec<&String> = outcome.checks.iter().filter(|(_, &ok)| !ok).map(|(k, _)| k).collect();
    if cli.assert && !failed.is_empty() {
        return Err(CliError::Assert(format!("{failed:?}")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wickns: {e}");
            e.exit_code()
        }
    }
}
