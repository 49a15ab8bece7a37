use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{
    act, actor_update, critic_update, decode_action, resolve_association, AgentNets, Experience,
    RawAction, ReplayBuffer,
};
use crate::env::{AssociationState, BeamformingConfig, NetworkEnv, PhaseConfig};
use crate::error::{Error, Result};
use crate::seeded_rng;

/// Learning hyperparameters. Defaults follow the reference DDPG settings, with a
/// desk-scale episode count and length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperParams {
    pub gamma: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub tau: f64,
    pub buffer: usize,
    pub episodes: usize,
    pub steps: usize,
    pub batch: usize,
    pub hidden: Vec<usize>,
    pub noise_start: f64,
    pub noise_end: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_clip: Option<f64>,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lr_actor: 1e-4,
            lr_critic: 1e-3,
            tau: 0.001,
            buffer: 10_000,
            episodes: 200,
            steps: 100,
            batch: 64,
            hidden: vec![64, 64],
            noise_start: 0.1,
            noise_end: 0.01,
            grad_clip: None,
        }
    }
}

/// Exploration std at global step `t` of `total`, linear from start to end.
pub fn noise_std_at(hyper: &HyperParams, t: usize, total: usize) -> f64 {
    if total <= 1 {
        return hyper.noise_start;
    }
    let frac = t as f64 / (total - 1) as f64;
    hyper.noise_start + (hyper.noise_end - hyper.noise_start) * frac
}

/// One BS's learner: networks, private replay memory and private random stream.
#[derive(Debug, Clone)]
pub struct Agent {
    pub id: usize,
    pub nets: AgentNets,
    pub buffer: ReplayBuffer,
    rng: ChaCha8Rng,
}

impl Agent {
    pub fn new(id: usize, nets: AgentNets, buffer_capacity: usize, rng: ChaCha8Rng) -> Self {
        Self {
            id,
            nets,
            buffer: ReplayBuffer::new(buffer_capacity),
            rng,
        }
    }

    pub fn act(&mut self, obs: &[f64], noise_std: f64) -> Result<RawAction> {
        act(&self.nets, obs, noise_std, &mut self.rng)
    }

    /// Minibatch update of critic, actor and targets once the buffer holds a full batch.
    /// Returns `(critic loss, actor objective)` when an update happened.
    fn learn(&mut self, hyper: &HyperParams) -> Result<Option<(f64, f64)>> {
        if self.buffer.len() < hyper.batch {
            return Ok(None);
        }
        let batch = self.buffer.sample(hyper.batch, &mut self.rng);
        let loss = critic_update(
            &mut self.nets,
            &batch,
            hyper.gamma,
            hyper.lr_critic,
            hyper.grad_clip,
        )?;
        let objective = actor_update(&mut self.nets, &batch, hyper.lr_actor, hyper.grad_clip)?;
        self.nets.soft_update_targets(hyper.tau)?;
        Ok(Some((loss, objective)))
    }
}

/// Association, phases and beams in force for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotConfig {
    pub assoc: AssociationState,
    pub phases: PhaseConfig,
    pub beams: BeamformingConfig,
}

/// Resolves the IRS bids of all raw actions, then decodes each BS's beams and phases.
pub fn apply_raw_actions(env: &NetworkEnv, raw: &[RawAction]) -> Result<SlotConfig> {
    let dims = *env.dims();
    let bids: Vec<&[f64]> = raw.iter().map(|a| a.bids(&dims)).collect();
    let assoc = resolve_association(&bids, env.cells(), env.channels());
    let mut phases = PhaseConfig::identity(dims.num_irs, dims.irs_elements);
    let mut beams = BeamformingConfig::zeros(dims.num_users, dims.bs_antennas);
    for (m, a) in raw.iter().enumerate() {
        let decoded = decode_action(a, m, env.cells(), &assoc, env.params().p_max, &dims)?;
        for (k, w) in decoded.beams {
            beams.set(k, w);
        }
        for (l, theta) in decoded.phases {
            phases.set(l, &theta);
        }
    }
    Ok(SlotConfig {
        assoc,
        phases,
        beams,
    })
}

/// Everything logged for one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub episode: usize,
    pub step: usize,
    pub rewards: Vec<f64>,
    pub sum_rate: f64,
    pub critic_loss: Vec<Option<f64>>,
    pub actor_objective: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub records: Vec<StepRecord>,
}

impl TrainingLog {
    /// Mean global sum rate of each episode, in episode order.
    pub fn episode_means(&self) -> Vec<f64> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for r in &self.records {
            if out.len() <= r.episode {
                out.resize(r.episode + 1, (0.0, 0));
            }
            out[r.episode].0 += r.sum_rate;
            out[r.episode].1 += 1;
        }
        out.into_iter()
            .map(|(s, n)| if n == 0 { 0.0 } else { s / n as f64 })
            .collect()
    }
}

/// Multi-agent DDPG over a [`NetworkEnv`].
///
/// Agents share nothing: each acts on its own observation, stores its own transitions
/// and updates its own networks. The environment step is the only meeting point.
#[derive(Debug, Clone)]
pub struct Trainer {
    env: NetworkEnv,
    agents: Vec<Agent>,
    hyper: HyperParams,
    global_step: usize,
}

impl Trainer {
    pub fn new(env: NetworkEnv, hyper: HyperParams, seed: u64) -> Result<Self> {
        let dims = *env.dims();
        let agents = (0..dims.num_bs)
            .map(|m| {
                let nets = AgentNets::new(
                    dims.observation_dim(),
                    dims.action_dim(),
                    &hyper.hidden,
                    &mut seeded_rng(seed, 100 + m as u64),
                )?;
                Ok(Agent::new(
                    m,
                    nets,
                    hyper.buffer,
                    seeded_rng(seed, 200 + m as u64),
                ))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            env,
            agents,
            hyper,
            global_step: 0,
        })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn env(&self) -> &NetworkEnv {
        &self.env
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hyper
    }

    fn total_steps(&self) -> usize {
        self.hyper.episodes * self.hyper.steps
    }

    /// Runs one episode of `hyper.steps` slots, handing each step's record to `on_step`.
    pub fn run_episode<F>(&mut self, episode: usize, mut on_step: F) -> Result<()>
    where
        F: FnMut(&StepRecord) -> Result<()>,
    {
        self.env.reset()?;
        for step in 0..self.hyper.steps {
            let record = self
                .step(episode, step)
                .map_err(|e| Error::Training(format!("episode {episode}, step {step}: {e}")))?;
            on_step(&record)?;
        }
        Ok(())
    }

    fn step(&mut self, episode: usize, step: usize) -> Result<StepRecord> {
        let num_bs = self.agents.len();
        let noise = noise_std_at(&self.hyper, self.global_step, self.total_steps());
        self.global_step += 1;

        let obs: Vec<Vec<f64>> = (0..num_bs).map(|m| self.env.observe(m).0).collect();
        let raw: Vec<RawAction> = self
            .agents
            .iter_mut()
            .zip(&obs)
            .map(|(agent, o)| agent.act(o, noise))
            .collect::<Result<_>>()?;
        let slot = apply_raw_actions(&self.env, &raw)?;
        let rewards = self.env.rewards(&slot.assoc, &slot.phases, &slot.beams)?;
        if let Some(bad) = rewards.iter().find(|r| !r.is_finite()) {
            return Err(Error::Training(format!("non-finite reward {bad}")));
        }
        self.env.commit_association(slot.assoc);
        self.env.advance()?;

        for (m, (agent, (o, a))) in self
            .agents
            .iter_mut()
            .zip(obs.into_iter().zip(raw))
            .enumerate()
        {
            agent.buffer.push(Experience {
                obs: o,
                action: a.0,
                reward: rewards[m],
                next_obs: self.env.observe(m).0,
            });
        }

        let hyper = &self.hyper;
        let updates: Vec<Result<Option<(f64, f64)>>> = if num_bs > 1 {
            std::thread::scope(|s| {
                let handles: Vec<_> = self
                    .agents
                    .iter_mut()
                    .map(|agent| s.spawn(move || agent.learn(hyper)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("agent update panicked"))
                    .collect()
            })
        } else {
            self.agents.iter_mut().map(|a| a.learn(hyper)).collect()
        };
        let mut critic_loss = Vec::with_capacity(num_bs);
        let mut actor_objective = Vec::with_capacity(num_bs);
        for u in updates {
            let u = u?;
            critic_loss.push(u.map(|x| x.0));
            actor_objective.push(u.map(|x| x.1));
        }
        Ok(StepRecord {
            episode,
            step,
            sum_rate: rewards.iter().sum(),
            rewards,
            critic_loss,
            actor_objective,
        })
    }
}

/// Runs the full training schedule and returns the trained agents with the step log.
pub fn train(env: NetworkEnv, hyper: HyperParams, seed: u64) -> Result<(Vec<Agent>, TrainingLog)> {
    let mut trainer = Trainer::new(env, hyper, seed)?;
    let mut log = TrainingLog::default();
    for episode in 0..trainer.hyper.episodes {
        trainer.run_episode(episode, |r| {
            log.records.push(r.clone());
            Ok(())
        })?;
    }
    Ok((trainer.agents, log))
}
