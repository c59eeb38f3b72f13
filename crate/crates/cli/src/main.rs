//! `gibbs-perc`: reproducible percolation experiments for interacting point
//! processes. Subcommands emit CSV tables (JSON mirrors behind `--json`)
//! whose bodies depend only on the config file and the seed.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use commands::{CmdError, Ctx};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gibbs-perc", version, about = "Percolation of interacting particle systems")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads; output bytes never depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Also write JSON mirrors of the CSV outputs.
    #[arg(long, global = true)]
    json: bool,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Print the built-in default configuration and exit.
    #[arg(long)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Phase-boundary curves over the lambda grid (region picture data).
    Bounds {
        /// Emit only the non-percolation side; skips the dimension-2 contour
        /// hypotheses.
        #[arg(long)]
        minus_only: bool,
        /// Append the literally printed subcritical curve for comparison.
        #[arg(long)]
        printed_beta_minus: bool,
    },
    /// Run one chain and dump snapshots plus diagnostics.
    Simulate,
    /// Estimate crossing probabilities over the (lambda, beta) grid.
    Percolation,
    /// Contour-length statistics for one chain.
    Contours,
    /// Extinction statistics of the dominating branching process.
    Gw,
    /// Check the configured potential against the shape conditions.
    ValidatePotential,
}

fn run() -> Result<(), CmdError> {
    let cli = Cli::parse();
    if cli.print_defaults {
        print!("{}", RunConfig::default().to_toml());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(CmdError::Usage(
            "missing subcommand; try --help or --print-defaults".into(),
        ));
    };

    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CmdError::Usage("--threads must be >= 1".into()));
        }
        // results are merged by task index, so the pool size cannot change
        // output bytes
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let config_path = cli
        .config
        .ok_or_else(|| CmdError::Usage("--config PATH is required".into()))?;
    let text = std::fs::read_to_string(&config_path).map_err(|e| {
        CmdError::Usage(format!("cannot read config {}: {e}", config_path.display()))
    })?;
    let mut config = RunConfig::from_toml(&text).map_err(CmdError::Usage)?;
    if let Some(seed) = cli.seed {
        config.mc.seed = seed;
    }
    // hash the resolved config so overridden seeds are visible in headers
    let resolved = config.to_toml();
    let hash = config::config_hash(&resolved);

    let ctx = Ctx { config: &config, out_dir: &cli.out, json: cli.json, config_hash: &hash };
    match command {
        Command::Bounds { minus_only, printed_beta_minus } => {
            commands::cmd_bounds(&ctx, minus_only, printed_beta_minus)
        }
        Command::Simulate => commands::cmd_simulate(&ctx),
        Command::Percolation => commands::cmd_percolation(&ctx),
        Command::Contours => commands::cmd_contours(&ctx),
        Command::Gw => commands::cmd_gw(&ctx),
        Command::ValidatePotential => commands::cmd_validate_potential(&ctx),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
