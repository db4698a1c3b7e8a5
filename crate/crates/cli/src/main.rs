//! `banditlab` command-line front end.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 when a numerical
//! routine fails to converge.

mod commands;
mod config;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use banditlab::policies::PolicyRegistry;
use config::ConfigError;

#[derive(Debug, Parser)]
#[command(name = "banditlab", version, about = "Adaptive experiment design and bandit policy simulations")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Minimal pilot sizes and oracle gains for variance profiles.
    Thresholds(Common),
    /// Two-stage adaptive Neyman MSE across pilot sizes against uniform.
    InferenceSweep(Common),
    /// Sum RMSE, average regret and joint loss of several policies.
    JointCompare(Common),
    /// Joint loss of several policies across horizons, with log-log slopes.
    RateSweep(Common),
    /// Oracle fixed allocation of the joint objective.
    Oracle(Common),
    /// Checks a config without running anything.
    ValidateConfig(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file.
    #[arg(short, long)]
    config: PathBuf,
    /// CSV destination; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Override a config value, e.g. `--set reps=100` or `--set instance.means.0=1.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for replications.
    #[arg(long, env = "BANDITLAB_THREADS")]
    threads: Option<usize>,
    /// Print floats at full precision.
    #[arg(long)]
    raw: bool,
}

enum Failure {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
    Io(anyhow::Error),
}

fn classify(e: anyhow::Error) -> Failure {
    if let Some(b) = e.downcast_ref::<banditlab::Error>() {
        if b.is_numerical() {
            return Failure::Numerical(e);
        }
        return Failure::Config(e);
    }
    if e.downcast_ref::<ConfigError>().is_some() {
        return Failure::Config(e);
    }
    Failure::Io(e)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (verb, common) = match &cli.verb {
        Verb::Thresholds(c) => ("thresholds", c),
        Verb::InferenceSweep(c) => ("inference-sweep", c),
        Verb::JointCompare(c) => ("joint-compare", c),
        Verb::RateSweep(c) => ("rate-sweep", c),
        Verb::Oracle(c) => ("oracle", c),
        Verb::ValidateConfig(c) => ("validate-config", c),
    };
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Failure::Config(ConfigError("--threads must be at least 1".into()).into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Io(e.into()))?;
    }
    let cfg = config::load(&common.config, &common.overrides, common.seed).map_err(classify)?;
    if matches!(cfg.lambda, Some(l) if l == 0.0 || l == 1.0) {
        eprintln!("warning: lambda at an endpoint of [0, 1]; use for diagnostics only");
    }
    let registry = PolicyRegistry::with_builtins();
    let output = match verb {
        "thresholds" => commands::thresholds(&cfg),
        "inference-sweep" => commands::inference_sweep(&cfg, &registry),
        "joint-compare" => commands::joint_compare(&cfg, &registry),
        "rate-sweep" => commands::rate_sweep(&cfg, &registry),
        "oracle" => commands::oracle(&cfg),
        _ => {
            let kind = cfg.validate(&registry).map_err(classify)?;
            println!("ok: {} is a valid {kind} config", common.config.display());
            return Ok(());
        }
    }
    .map_err(classify)?;

    let write = |w: &mut dyn Write| table::write_tables(w, &output.tables, common.raw);
    match &common.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| Failure::Io(e.into()))?;
            write(&mut BufWriter::new(file))
        }
        None => write(&mut io::stdout().lock()),
    }
    .map_err(|e| Failure::Io(e.into()))?;

    if output.row_errors > 0 {
        return Err(Failure::Config(
            ConfigError(format!("{} row(s) reported errors", output.row_errors)).into(),
        ));
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
