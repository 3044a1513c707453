use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ddqmc_cli::{cmd_exact, cmd_extrapolate, cmd_run, cmd_susceptibility, cmd_sweep, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "ddqmc", version, about = "Stochastic steady states of the dissipative XYZ lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to the config's `output`, then `.`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Single simulation: time-series CSV plus summary JSON.
    Run(Common),
    /// One run per Jy value.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Jy values, overriding `sweep.Jy` in the config.
        #[arg(long, value_delimiter = ',')]
        jy: Option<Vec<f64>>,
    },
    /// Seven-run field protocol for the in-plane susceptibility.
    Susceptibility {
        #[command(flatten)]
        common: Common,
        /// Three field strengths, overriding `fields` in the config.
        #[arg(long, value_delimiter = ',')]
        fields: Option<Vec<f64>>,
    },
    /// Dense steady state (at most 5 sites).
    Exact(Common),
    /// Runs at several initiator limits and a linear fit to zero.
    Extrapolate {
        #[command(flatten)]
        common: Common,
        /// Initiator limits, overriding `initiator_limits` in the config.
        #[arg(long, value_delimiter = ',')]
        limits: Option<Vec<f64>>,
    },
}

fn prepare(common: &Common) -> Result<(RunConfig, PathBuf), CliError> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.engine.seed = seed;
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| Path::new(".").to_path_buf());
    Ok((cfg, out))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), CliError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(common) => {
            let (cfg, out) = prepare(&common)?;
            print_json(&cmd_run(&cfg, &out)?)
        }
        Command::Sweep { common, jy } => {
            let (cfg, out) = prepare(&common)?;
            let jys = jy.or_else(|| cfg.sweep.as_ref().map(|s| s.jy.clone())).unwrap_or_default();
            print_json(&cmd_sweep(&cfg, &jys, &out)?)
        }
        Command::Susceptibility { common, fields } => {
            let (cfg, out) = prepare(&common)?;
            let fields = fields
                .or_else(|| cfg.fields.clone())
                .unwrap_or_else(|| vec![0.05, 0.1, 0.15]);
            print_json(&cmd_susceptibility(&cfg, &fields, &out)?)
        }
        Command::Exact(common) => {
            let (cfg, out) = prepare(&common)?;
            print_json(&cmd_exact(&cfg, &out)?)
        }
        Command::Extrapolate { common, limits } => {
            let (cfg, out) = prepare(&common)?;
            let limits = limits.or_else(|| cfg.initiator_limits.clone()).unwrap_or_default();
            print_json(&cmd_extrapolate(&cfg, &limits, &out)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
