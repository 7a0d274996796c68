use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pseudoellipsoid::cli::{cmd_audit, cmd_build, cmd_trace, TraceMode};
use pseudoellipsoid::config::RunConfig;

#[derive(Parser)]
#[command(version, about = "Proper holomorphic maps into generalized pseudoellipsoids")]
struct Args {
    /// `key = value` run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `out_dir` from the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `seed` from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audit the geometric and peak-function estimates.
    Audit,
    /// Run the inductive construction and write a checkpoint.
    Build,
    /// Evaluate a checkpointed map along a path.
    Trace {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum)]
        mode: TraceMode,
        #[arg(long, allow_hyphen_values = true)]
        theta0: Option<f64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let mut cfg = match args.config {
        Some(path) => match RunConfig::load(&path) {
            Ok(cfg) => cfg,
            Err(e) => {
                log::error!("{e}");
                return ExitCode::from(2);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let code = match args.command {
        Command::Audit => cmd_audit(&cfg),
        Command::Build => cmd_build(&cfg),
        Command::Trace {
            checkpoint,
            mode,
            theta0,
        } => cmd_trace(&cfg, &checkpoint, mode, theta0),
    };
    ExitCode::from(code as u8)
}
