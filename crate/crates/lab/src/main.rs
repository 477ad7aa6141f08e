use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sausage_lab::{parse_config, run_command, Command, ExperimentConfig, LabError, Options};

#[derive(Parser)]
#[command(version, about = "Run sausage CLT experiments from a TOML config")]
struct Cli {
    /// Experiment config; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for replica execution.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use the known-limit surrogate process instead of the sausage.
    #[arg(long, global = true)]
    surrogate: bool,
    /// Replace both master seeds (evaluation becomes seed + 1).
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Exit with status 4 when an acceptance check fails.
    #[arg(long, global = true)]
    check: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate evaluation paths and store them as CSV.
    Simulate,
    /// Persistence pairs and Betti curves per replica, or of one input file.
    Persistence {
        /// Point (x,y) or path (t,x,y) CSV.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Regeneration cuts, cycle records and lag tables.
    Regen,
    /// Calibrated CLT experiment and report.
    Clt,
    /// Plot-ready CSVs from an existing report.
    Report {
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<Vec<String>, LabError> {
    let mut cfg = match &cli.config {
        Some(p) => parse_config(&std::fs::read_to_string(p).map_err(|source| LabError::File { path: p.display().to_string(), source })?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed_override {
        cfg.override_seed(s);
    }
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| LabError::Config(e.to_string()))?;
    }
    let mut opts = Options { out: cli.out, surrogate: cli.surrogate, check: cli.check, ..Options::default() };
    let cmd = match cli.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::Persistence { input } => {
            opts.input = input;
            Command::Persistence
        }
        Cmd::Regen => Command::Regen,
        Cmd::Clt => Command::Clt,
        Cmd::Report { report } => {
            opts.report = report;
            Command::Report
        }
    };
    let outcome = run_command(cmd, &cfg, &opts)?;
    log::info!("{} files listed in manifest_{}.json", outcome.manifest.files.len(), cmd.name());
    Ok(outcome.failures)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).target(env_logger::Target::Stderr).init();
    match run(Cli::parse()) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in &failures {
                log::error!("check failed: {f}");
            }
            ExitCode::from(4)
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
