//! Config-driven experiment runner behind the `seqfuse` binary.
//!
//! Every subcommand resolves a [`RunConfig`] from an optional JSON file,
//! command-line flags and dotted `--set` overrides, writes the resolved
//! config next to its outputs and only ever writes under `out`.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::{cmd_eval, cmd_finetune, cmd_sweep, cmd_synth, cmd_train, load_data, LoadedData};
pub use config::{DataConfig, EvalSection, FinetuneSection, RunConfig};

/// Invalid configuration or command line.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_DIVERGENCE: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "seqfuse", version, about = "Train and evaluate multi-sequence user embedding models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct CommonArgs {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Sets every seed of the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Number of synthetic users.
    #[arg(long, global = true)]
    pub users: Option<usize>,
    /// Override a config value, e.g. `--set model.trunk_depth=2`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub sets: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Embedding,
    Depth,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with its schema and generator parameters.
    Synth,
    /// Train the multi-task model.
    Train,
    /// Fine-tune single-target models from a multi-task checkpoint.
    Finetune {
        /// Target name or `all`.
        target: Option<String>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Compare systems on the test split.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Fine-tuned checkpoints to reuse.
        #[arg(long, num_args = 1..)]
        finetuned: Vec<PathBuf>,
    },
    /// Embedding-size and trunk-depth sweeps.
    Sweep {
        #[arg(value_enum, default_value_t = SweepKind::All)]
        kind: SweepKind,
    },
}

impl Cli {
    /// Resolves the effective configuration of this invocation.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let c = &self.common;
        let mut cfg = RunConfig::load(c.config.as_deref())?;
        if let Some(seed) = c.seed {
            cfg.reseed(seed);
        }
        if let Some(out) = &c.out {
            cfg.out = out.clone();
        }
        if let Some(jobs) = c.jobs {
            cfg.jobs = jobs;
        }
        if let Some(users) = c.users {
            cfg.data.synth.n_users = users;
        }
        match &self.command {
            Command::Finetune { target, checkpoint } => {
                if let Some(t) = target {
                    cfg.finetune.target = t.clone();
                }
                if checkpoint.is_some() {
                    cfg.checkpoint = checkpoint.clone();
                }
            }
            Command::Eval { checkpoint, finetuned } => {
                if checkpoint.is_some() {
                    cfg.checkpoint = checkpoint.clone();
                }
                if !finetuned.is_empty() {
                    cfg.eval.finetuned = finetuned.clone();
                }
            }
            _ => {}
        }
        cfg.with_overrides(&c.sets)
    }
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = cli.resolve()?;
    match &cli.command {
        Command::Synth => cmd_synth(&cfg),
        Command::Train => cmd_train(&cfg),
        Command::Finetune { .. } => cmd_finetune(&cfg),
        Command::Eval { .. } => cmd_eval(&cfg),
        Command::Sweep { kind } => cmd_sweep(&cfg, *kind),
    }
}

/// Process exit status for a failed run.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    use seqfuse_core::Error as E;
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Config(_) | E::UnknownTarget { .. } | E::EnumerationBound { .. } => EXIT_CONFIG,
                E::Divergence { .. } | E::NonFinite(_) => EXIT_DIVERGENCE,
                _ => EXIT_DATA,
            };
        }
    }
    1
}
