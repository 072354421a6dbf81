use std::path::PathBuf;
use std::process::ExitCode;

use apergodic::config::Experiment;
use apergodic::{load_config, run_to_dir, run_to_file, Artifacts, Result, RunError, RunOptions};
use clap::{Args, Parser, Subcommand};

/// Simulation harness for asymptotically periodic Markov processes and
/// moving-boundary quasi-ergodic estimation.
///
/// Exit codes: 0 success, 1 IO or golden mismatch, 2 invalid config,
/// 3 numeric failure.
#[derive(Parser)]
#[command(name = "apergodic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run any experiment, writing all artifacts and a manifest into a directory.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory; defaults to the config's `output` field.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compare CSV artifacts with the files in this directory.
        #[arg(long)]
        golden: Option<PathBuf>,
    },
    /// Ergodic-average report (`t,mean_avg,l2_err,var,stderr`).
    Ergodic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Quasi-ergodic occupation histogram (`bin_center,mass`).
    Qsd {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Boundary-convergence gaps (`k,gap,stderr,sandwich_prob`).
    Survival {
        #[command(flatten)]
        common: Common,
        /// Comma-separated shifts `k`, replacing the config's `k_list`.
        #[arg(long, value_delimiter = ',')]
        k_list: Option<Vec<u32>>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn options(c: &Common, golden: Option<PathBuf>) -> RunOptions {
    RunOptions { seed: c.seed, threads: c.threads, golden }
}

fn expect_kind(cfg: &apergodic::ExperimentConfig, kind: &str) -> Result<()> {
    if cfg.experiment.kind() == kind {
        Ok(())
    } else {
        Err(RunError::invalid("experiment.kind", format!("expected `{kind}`, found `{}`", cfg.experiment.kind())))
    }
}

fn dispatch(cli: Cli) -> Result<Artifacts> {
    match cli.command {
        Command::Run { common, out, golden } => {
            let cfg = load_config(&common.config)?;
            let dir = out
                .or_else(|| cfg.output.as_ref().map(PathBuf::from))
                .ok_or_else(|| RunError::invalid("output", "give --out or set `output` in the config"))?;
            run_to_dir(&cfg, &dir, &options(&common, golden))
        }
        Command::Ergodic { common, out } => {
            let cfg = load_config(&common.config)?;
            expect_kind(&cfg, "ergodic")?;
            run_to_file(&cfg, &out, &options(&common, None))
        }
        Command::Qsd { common, out } => {
            let cfg = load_config(&common.config)?;
            expect_kind(&cfg, "qsd")?;
            run_to_file(&cfg, &out, &options(&common, None))
        }
        Command::Survival { common, k_list, out } => {
            let mut cfg = load_config(&common.config)?;
            expect_kind(&cfg, "survival")?;
            if let (Some(ks), Experiment::Survival(p)) = (k_list, &mut cfg.experiment) {
                p.k_list = ks;
            }
            run_to_file(&cfg, &out, &options(&common, None))
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(artifacts) => {
            for a in &artifacts.files {
                eprintln!("wrote {} ({} bytes)", a.name, a.bytes.len());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
