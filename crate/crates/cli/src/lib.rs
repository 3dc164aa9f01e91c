//! Command-line front end for the `resadapt` simulator.
//!
//! Every command reads a TOML run configuration, lets the command-line flags
//! override the `[run]` section, writes its tables into the output directory
//! and drops the resolved configuration next to them.

pub mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use resadapt::config::RunConfig;
use resadapt::engine::Engine;
use resadapt::Error;

pub use commands::Context;

#[derive(Debug, Parser)]
#[command(name = "resadapt", version, about = "Resolution-adaptive massive MU-MIMO uplink simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores). Never changes results.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Power breakdown over the sweep grid and UE counts.
    Power,
    /// BER versus SNR for the system configuration.
    Ber,
    /// SNR-loss sweep and Pareto envelope per UE count.
    Pareto,
    /// Pareto sweep followed by the baseline-versus-adaptive comparison.
    Compare,
    /// Export one channel draw with its estimate and equalizer matrices.
    DumpChannel(DumpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatrixFormat {
    Csv,
    Bin,
}

#[derive(Debug, Clone, Args)]
pub struct DumpArgs {
    /// Trial index selecting the random streams.
    #[arg(long, default_value_t = 0)]
    pub trial: u64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub snr_db: f64,
    #[arg(long, value_enum, default_value_t = MatrixFormat::Csv)]
    pub format: MatrixFormat,
}

/// Loads the configuration and applies the flag overrides.
pub fn resolve_config(args: &GlobalArgs) -> resadapt::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    if let Some(workers) = args.workers {
        cfg.run.workers = workers;
    }
    if let Some(out) = &args.out {
        cfg.run.out = out.to_string_lossy().into_owned();
    }
    cfg.run.verbose |= args.verbose;
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli) -> resadapt::Result<()> {
    let config = resolve_config(&cli.global)?;
    let ctx = Context::new(config)?;
    match &cli.command {
        Command::Power => commands::cmd_power(&ctx).map(drop),
        Command::Ber => commands::cmd_ber(&ctx).map(drop),
        Command::Pareto => commands::cmd_pareto(&ctx).map(drop),
        Command::Compare => commands::cmd_compare(&ctx).map(drop),
        Command::DumpChannel(args) => commands::cmd_dump_channel(&ctx, args),
    }
}

/// Process exit code: 2 configuration, 3 infeasible target, 4 numerical
/// failure, 1 I/O.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Infeasible { .. } | Error::BelowSearchRange { .. } | Error::NoFeasible(_) => 3,
        Error::Numerical(_)
        | Error::DegenerateChannel { .. }
        | Error::DegenerateEqualizer { .. }
        | Error::ModelUndefined(_) => 4,
        Error::Io(_) => 1,
    }
}

/// Engine for a resolved configuration.
pub fn engine_for(cfg: &RunConfig) -> resadapt::Result<Engine> {
    Engine::new(cfg.run.workers)
}
