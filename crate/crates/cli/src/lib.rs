//! Library surface of the command-line driver: argument definitions, config
//! resolution and command implementations. The binary in `main.rs` is a thin
//! shell around [`run`].

pub mod commands;
pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use uavsense::{Error, Result};

/// Exit codes: 0 success, 1 validation failure, 2 config error, 3 capacity
/// error, 4 I/O error.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Domain { .. } | Error::InvalidGridPoint { .. }
        | Error::DegeneratePlane => 2,
        Error::Capacity { .. } => 3,
        Error::Io(_) | Error::Serde(_) => 4,
    }
}

#[derive(Parser)]
#[command(
    name = "uavsense",
    version,
    about = "Frame-level simulator and analytics for cellular UAV sense-and-send networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args)]
pub struct CommonArgs {
    /// Scenario file with flat `key = value` assignments.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed; required by commands that draw randomness.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default `out/`).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Dotted-key overrides, e.g. `--set channel.tx_power_dbm=12`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Override run.cycles.
    #[arg(long)]
    pub cycles: Option<usize>,
    /// Override run.replicas.
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Override run.algorithm (single|opponent|enhanced).
    #[arg(long)]
    pub algorithm: Option<String>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Train the configured trajectory learner and write metric series.
    Learn {
        #[command(flatten)]
        common: CommonArgs,
        /// Also dump per-UAV Q-table checkpoints of the last replica.
        #[arg(long)]
        save_qtables: bool,
    },
    /// Analytic queries against the configured scenario.
    Analyze {
        #[command(subcommand)]
        what: AnalyzeCommand,
    },
    /// Monte Carlo validation of the analytic chain.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        /// Simulated cycles per check.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Sweep the transmission-phase duration and report valid-data rates.
    SweepTu {
        #[command(flatten)]
        common: CommonArgs,
        /// First transmission-phase length (overrides sweep.from).
        #[arg(long)]
        from: Option<u32>,
        /// Last transmission-phase length (overrides sweep.to).
        #[arg(long)]
        to: Option<u32>,
    },
}

#[derive(Subcommand)]
pub enum AnalyzeCommand {
    /// Valid-transmission probability over the BS-task vertical slice.
    Txmap {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Uplink and valid-data probabilities of the configured hover scenario.
    Uplink {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Optimal transmission-phase duration, closed form vs root-finding.
    OptimalTu {
        #[command(flatten)]
        common: CommonArgs,
    },
}

/// Resolves the layered configuration for a command.
fn resolve_config(common: &CommonArgs) -> Result<config::ResolvedConfig> {
    let file_layer = match &common.config {
        Some(path) => config::load_config_file(path)?,
        None => BTreeMap::new(),
    };
    let mut override_layer = BTreeMap::new();
    for item in &common.overrides {
        let Some((k, v)) = item.split_once('=') else {
            return Err(Error::config(format!(
                "--set expects KEY=VALUE, got `{item}`"
            )));
        };
        override_layer.insert(k.trim().to_string(), v.trim().to_string());
    }
    let mut flag_layer = BTreeMap::new();
    if let Some(c) = common.cycles {
        flag_layer.insert("run.cycles".to_string(), c.to_string());
    }
    if let Some(r) = common.replicas {
        flag_layer.insert("run.replicas".to_string(), r.to_string());
    }
    if let Some(a) = &common.algorithm {
        flag_layer.insert("run.algorithm".to_string(), a.clone());
    }
    config::resolve(&[&file_layer, &override_layer, &flag_layer])
}

fn require_seed(common: &CommonArgs) -> Result<u64> {
    common
        .seed
        .ok_or_else(|| Error::config("--seed is required for commands that draw randomness"))
}

/// Runs the parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Learn {
            common,
            save_qtables,
        } => (|| {
            let resolved = resolve_config(common)?;
            let seed = require_seed(common)?;
            commands::cmd_learn(&resolved, seed, &common.out, *save_qtables).map(|_| true)
        })(),
        Command::Analyze { what } => {
            let (common, runner): (_, fn(&config::ResolvedConfig, &std::path::Path) -> Result<()>) =
                match what {
                    AnalyzeCommand::Txmap { common } => (common, commands::cmd_analyze_txmap),
                    AnalyzeCommand::Uplink { common } => (common, commands::cmd_analyze_uplink),
                    AnalyzeCommand::OptimalTu { common } => {
                        (common, commands::cmd_analyze_optimal_tu)
                    }
                };
            (|| {
                let resolved = resolve_config(common)?;
                runner(&resolved, &common.out).map(|_| true)
            })()
        }
        Command::Validate { common, trials } => (|| {
            let resolved = resolve_config(common)?;
            let seed = require_seed(common)?;
            commands::cmd_validate(&resolved, *trials, seed, &common.out)
        })(),
        Command::SweepTu { common, from, to } => (|| {
            let mut resolved = resolve_config(common)?;
            let seed = require_seed(common)?;
            if let Some(f) = from {
                resolved.sweep.from = *f;
            }
            if let Some(t) = to {
                resolved.sweep.to = *t;
            }
            commands::cmd_sweep_tu(&resolved, seed, &common.out).map(|_| true)
        })(),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1, // statistical validation failure
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}
