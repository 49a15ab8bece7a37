use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use irsnet_core::config::{load_config, ExperimentConfig};
use irsnet_core::experiment::{
    load_checkpoints, run_compare, run_evaluate, run_policy, run_train, Strategy,
};

/// Multi-IRS downlink simulator with per-BS DDPG agents.
#[derive(Parser)]
#[command(name = "irsnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Record real elapsed time in `wall_time_ms` (output is then not reproducible).
    #[arg(long)]
    wall_clock: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train the agents; writes metrics.csv and checkpoints/ under --out.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Evaluate trained agents without exploration noise.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// A checkpoint directory, or one file per BS.
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        checkpoints: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        episodes: usize,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate several strategies on the same channel and mobility trajectory.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of mdlbi, fixed, random, oracle.
        #[arg(long, value_delimiter = ',', required = true)]
        strategies: Vec<Strategy>,
        /// Needed for the mdlbi strategy.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        checkpoints: Vec<PathBuf>,
        #[arg(long, default_value_t = 1)]
        episodes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-slot exhaustive association search.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        episodes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A non-learning baseline.
    Baseline {
        #[command(flatten)]
        common: Common,
        /// fixed or random.
        #[arg(long, default_value = "fixed")]
        strategy: Strategy,
        #[arg(long, default_value_t = 1)]
        episodes: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn config(common: &Common) -> Result<ExperimentConfig> {
    let mut c = load_config(&common.config)
        .with_context(|| format!("loading {}", common.config.display()))?;
    if let Some(s) = common.seed {
        c.seed = s;
        c.validate()?;
    }
    Ok(c)
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { common, out } => {
            let c = config(&common)?;
            let summary = run_train(&c, &out, common.wall_clock)?;
            let tail = (summary.episode_means.len() / 10).max(1);
            let recent = &summary.episode_means[summary.episode_means.len() - tail..];
            eprintln!(
                "wrote {} and {} checkpoints; mean sum rate over the last {tail} episodes: {:.4}",
                summary.metrics.display(),
                summary.checkpoints.len(),
                recent.iter().sum::<f64>() / tail as f64
            );
        }
        Command::Evaluate {
            common,
            checkpoints,
            episodes,
            out,
        } => {
            let c = config(&common)?;
            let nets = load_checkpoints(&c, &checkpoints)?;
            run_evaluate(
                &c,
                &nets,
                episodes,
                sink(out.as_deref())?,
                common.wall_clock,
            )?;
        }
        Command::Compare {
            common,
            strategies,
            checkpoints,
            episodes,
            out,
        } => {
            let c = config(&common)?;
            let nets = if checkpoints.is_empty() {
                None
            } else {
                Some(load_checkpoints(&c, &checkpoints)?)
            };
            run_compare(
                &c,
                &strategies,
                nets.as_deref(),
                episodes,
                sink(out.as_deref())?,
                common.wall_clock,
            )?;
        }
        Command::Oracle {
            common,
            episodes,
            out,
        } => {
            let c = config(&common)?;
            run_policy(
                &c,
                Strategy::Oracle,
                None,
                episodes,
                sink(out.as_deref())?,
                common.wall_clock,
            )?;
        }
        Command::Baseline {
            common,
            strategy,
            episodes,
            out,
        } => {
            if !matches!(strategy, Strategy::Fixed | Strategy::Random) {
                bail!("baseline strategy must be fixed or random");
            }
            let c = config(&common)?;
            run_policy(
                &c,
                strategy,
                None,
                episodes,
                sink(out.as_deref())?,
                common.wall_clock,
            )?;
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("IRSNET_LOG", "warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
