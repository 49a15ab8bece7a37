//! Experiment orchestration and CSV metrics.
//!
//! Every CSV starts with `#` provenance lines (artifact version, SHA-256 of the
//! canonical config, seed) followed by the header. Each slot produces one row per
//! agent and a global row with `agent_id = -1` whose `reward` column is blank.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::agent::{load_agent_checkpoint, save_agent_checkpoint, AgentNets, StepRecord, Trainer};
use crate::baselines::{
    rollout, FixedAssociationPolicy, GreedyPolicy, OraclePolicy, Policy, RandomPolicy,
};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::seeded_rng;

pub const CSV_HEADER: &str =
    "episode,step,agent_id,reward,sum_rate,critic_loss,actor_objective,wall_time_ms";

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of the config's canonical TOML serialization.
pub fn config_hash(config: &ExperimentConfig) -> Result<String> {
    let digest = Sha256::digest(config.to_toml_string()?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Streams [`StepRecord`]s as CSV rows.
pub struct MetricsWriter<W: Write> {
    out: W,
    tagged: bool,
    clock: Option<Instant>,
}

impl<W: Write> MetricsWriter<W> {
    /// Writes the provenance lines and the header. With `tagged`, every row starts with
    /// a `strategy` column. `wall_time_ms` is 0 unless `wall_clock` is set, which keeps
    /// repeated runs byte-identical.
    pub fn new(
        mut out: W,
        config: &ExperimentConfig,
        tagged: bool,
        wall_clock: bool,
    ) -> Result<Self> {
        writeln!(out, "# irsnet {VERSION}")?;
        writeln!(out, "# config_sha256 {}", config_hash(config)?)?;
        writeln!(out, "# seed {}", config.seed)?;
        if tagged {
            writeln!(out, "strategy,{CSV_HEADER}")?;
        } else {
            writeln!(out, "{CSV_HEADER}")?;
        }
        Ok(Self {
            out,
            tagged,
            clock: wall_clock.then(Instant::now),
        })
    }

    pub fn write_step(&mut self, strategy: &str, r: &StepRecord) -> Result<()> {
        let ms = self.clock.map_or(0, |c| c.elapsed().as_millis());
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let tag = if self.tagged {
            format!("{strategy},")
        } else {
            String::new()
        };
        for (m, reward) in r.rewards.iter().enumerate() {
            writeln!(
                self.out,
                "{tag}{},{},{m},{reward},{},{},{},{ms}",
                r.episode,
                r.step,
                r.sum_rate,
                opt(r.critic_loss.get(m).copied().flatten()),
                opt(r.actor_objective.get(m).copied().flatten()),
            )?;
        }
        writeln!(
            self.out,
            "{tag}{},{},-1,,{},,,{ms}",
            r.episode, r.step, r.sum_rate
        )?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        Ok(self.out.flush()?)
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub fn checkpoint_path(dir: &Path, agent: usize, episode: Option<usize>) -> PathBuf {
    match episode {
        Some(e) => dir.join(format!("agent{agent}_ep{e}.json")),
        None => dir.join(format!("agent{agent}_final.json")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub metrics: PathBuf,
    pub checkpoints: Vec<PathBuf>,
    /// Mean global sum rate of each episode.
    pub episode_means: Vec<f64>,
}

/// Trains with `config.seed`, writing `metrics.csv` and `checkpoints/` under `out_dir`.
///
/// Rows are flushed after every episode, so a failed run leaves the completed
/// episodes on disk.
pub fn run_train(
    config: &ExperimentConfig,
    out_dir: &Path,
    wall_clock: bool,
) -> Result<TrainSummary> {
    config.validate()?;
    let ckpt_dir = out_dir.join("checkpoints");
    fs::create_dir_all(&ckpt_dir)?;
    let metrics = out_dir.join("metrics.csv");
    let mut writer = MetricsWriter::new(
        BufWriter::new(File::create(&metrics)?),
        config,
        false,
        wall_clock,
    )?;
    let mut trainer = Trainer::new(
        config.build_env(config.seed)?,
        config.hyper.clone(),
        config.seed,
    )?;
    let mut checkpoints = Vec::new();
    let mut episode_means = Vec::with_capacity(config.hyper.episodes);
    for episode in 0..config.hyper.episodes {
        let mut total = 0.0;
        let outcome = trainer.run_episode(episode, |r| {
            total += r.sum_rate;
            writer.write_step("", r)
        });
        writer.flush()?;
        outcome?;
        episode_means.push(total / config.hyper.steps as f64);
        log::info!(
            "episode {episode}: mean sum rate {:.4}",
            episode_means[episode]
        );
        let last = episode + 1 == config.hyper.episodes;
        let periodic = config.checkpoint_every > 0 && (episode + 1) % config.checkpoint_every == 0;
        if periodic && !last {
            for a in trainer.agents() {
                let p = checkpoint_path(&ckpt_dir, a.id, Some(episode));
                save_agent_checkpoint(&p, a.id, &a.nets)?;
                checkpoints.push(p);
            }
        }
    }
    for a in trainer.agents() {
        let p = checkpoint_path(&ckpt_dir, a.id, None);
        save_agent_checkpoint(&p, a.id, &a.nets)?;
        checkpoints.push(p);
    }
    Ok(TrainSummary {
        metrics,
        checkpoints,
        episode_means,
    })
}

/// Loads one checkpoint per BS. `paths` is either a single directory holding
/// `agent{m}_final.json` files or one file per BS in BS order.
pub fn load_checkpoints(config: &ExperimentConfig, paths: &[PathBuf]) -> Result<Vec<AgentNets>> {
    let dims = config.network.dims();
    let files: Vec<PathBuf> = match paths {
        [dir] if dir.is_dir() => (0..dims.num_bs)
            .map(|m| checkpoint_path(dir, m, None))
            .collect(),
        _ => paths.to_vec(),
    };
    if files.len() != dims.num_bs {
        return Err(Error::Checkpoint(format!(
            "expected {} checkpoints, got {}",
            dims.num_bs,
            files.len()
        )));
    }
    files
        .iter()
        .enumerate()
        .map(|(m, f)| {
            let (id, nets) = load_agent_checkpoint(f, dims.observation_dim(), dims.action_dim())?;
            if id != m {
                return Err(Error::Checkpoint(format!(
                    "{} holds agent {id} but was given for BS {m}",
                    f.display()
                )));
            }
            Ok(nets)
        })
        .collect()
}

/// Strategy names accepted by [`run_compare`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Mdlbi,
    Fixed,
    Random,
    Oracle,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Mdlbi => "mdlbi",
            Strategy::Fixed => "fixed",
            Strategy::Random => "random",
            Strategy::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "mdlbi" => Ok(Strategy::Mdlbi),
            "fixed" => Ok(Strategy::Fixed),
            "random" => Ok(Strategy::Random),
            "oracle" => Ok(Strategy::Oracle),
            other => Err(Error::Config(format!(
                "unknown strategy `{other}` (expected mdlbi, fixed, random or oracle)"
            ))),
        }
    }
}

fn make_policy(
    config: &ExperimentConfig,
    strategy: Strategy,
    learned: Option<&[AgentNets]>,
) -> Result<Box<dyn Policy>> {
    Ok(match strategy {
        Strategy::Mdlbi => {
            let nets =
                learned.ok_or_else(|| Error::Config("strategy mdlbi needs checkpoints".into()))?;
            Box::new(GreedyPolicy {
                nets: nets.to_vec(),
            })
        }
        Strategy::Fixed => Box::new(FixedAssociationPolicy {
            bs_of_irs: config.fixed_association()?,
            budget: config.oracle,
        }),
        Strategy::Random => Box::new(RandomPolicy::new(seeded_rng(config.seed, 300))),
        Strategy::Oracle => Box::new(OraclePolicy {
            budget: config.oracle,
        }),
    })
}

/// Evaluates each strategy on the same evaluation trajectory (`episodes × hyper.steps`
/// slots from `config.seed`) and writes one tagged CSV.
pub fn run_compare<W: Write>(
    config: &ExperimentConfig,
    strategies: &[Strategy],
    learned: Option<&[AgentNets]>,
    episodes: usize,
    out: W,
    wall_clock: bool,
) -> Result<W> {
    config.validate()?;
    let mut writer = MetricsWriter::new(out, config, true, wall_clock)?;
    for &s in strategies {
        let mut policy = make_policy(config, s, learned)?;
        let mut env = config.build_eval_env(config.seed)?;
        let steps = config.hyper.steps;
        rollout(&mut env, policy.as_mut(), episodes, steps, |r| {
            writer.write_step(s.name(), r)?;
            if r.step + 1 == steps {
                writer.flush()?;
            }
            Ok(())
        })?;
    }
    writer.flush()?;
    Ok(writer.into_inner())
}

/// Runs one strategy on the evaluation trajectory and writes the untagged CSV.
pub fn run_policy<W: Write>(
    config: &ExperimentConfig,
    strategy: Strategy,
    learned: Option<&[AgentNets]>,
    episodes: usize,
    out: W,
    wall_clock: bool,
) -> Result<W> {
    config.validate()?;
    let mut writer = MetricsWriter::new(out, config, false, wall_clock)?;
    let mut policy = make_policy(config, strategy, learned)?;
    let mut env = config.build_eval_env(config.seed)?;
    let steps = config.hyper.steps;
    rollout(&mut env, policy.as_mut(), episodes, steps, |r| {
        writer.write_step("", r)?;
        if r.step + 1 == steps {
            writer.flush()?;
        }
        Ok(())
    })?;
    writer.flush()?;
    Ok(writer.into_inner())
}

/// Noise-free evaluation of trained agents.
pub fn run_evaluate<W: Write>(
    config: &ExperimentConfig,
    learned: &[AgentNets],
    episodes: usize,
    out: W,
    wall_clock: bool,
) -> Result<W> {
    run_policy(
        config,
        Strategy::Mdlbi,
        Some(learned),
        episodes,
        out,
        wall_clock,
    )
}
