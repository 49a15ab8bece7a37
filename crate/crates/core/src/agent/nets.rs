use rand::Rng;
use rand_distr::StandardNormal;

use crate::agent::{Experience, RawAction};
use crate::error::{shape_err, Error, Result};
use crate::nn::{clip_global_norm, soft_update, Activation, AdamState, Batch, Mlp, MlpSpec};

/// Actor, critic, their target copies and optimizer states of one BS.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentNets {
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
}

impl AgentNets {
    /// Fresh networks: actor `obs → hidden → action` with tanh output, critic
    /// `[obs | action] → hidden → 1` with identity output. Targets start as exact copies.
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        let actor = Mlp::init(
            &MlpSpec::new(obs_dim, hidden, action_dim, Activation::Tanh),
            rng,
        )?;
        let critic = Mlp::init(
            &MlpSpec::new(obs_dim + action_dim, hidden, 1, Activation::Identity),
            rng,
        )?;
        Ok(Self::from_networks(actor, critic))
    }

    pub fn from_networks(actor: Mlp, critic: Mlp) -> Self {
        Self {
            actor_opt: AdamState::new(&actor),
            critic_opt: AdamState::new(&critic),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn soft_update_targets(&mut self, tau: f64) -> Result<()> {
        soft_update(&mut self.target_actor, &self.actor, tau)?;
        soft_update(&mut self.target_critic, &self.critic, tau)
    }
}

/// Actor output plus N(0, σ²) exploration noise per component, clamped to `[−1, 1]`.
pub fn act<R: Rng + ?Sized>(
    nets: &AgentNets,
    obs: &[f64],
    noise_std: f64,
    rng: &mut R,
) -> Result<RawAction> {
    let mut a = nets.actor.predict(obs)?;
    if noise_std > 0.0 {
        for v in &mut a {
            let n: f64 = rng.sample(StandardNormal);
            *v += noise_std * n;
        }
    }
    a.iter_mut().for_each(|v| *v = v.clamp(-1.0, 1.0));
    Ok(RawAction(a))
}

fn stack(batch: &[&Experience], pick: impl Fn(&Experience) -> &[f64]) -> Result<Batch> {
    let rows: Vec<&[f64]> = batch.iter().map(|e| pick(e)).collect();
    Batch::from_rows(&rows)
}

fn check_batch(nets: &AgentNets, batch: &[&Experience]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Training("empty minibatch".into()));
    }
    for e in batch {
        for o in [&e.obs, &e.next_obs] {
            if o.len() != nets.obs_dim() {
                return Err(shape_err(
                    format!("observations of length {}", nets.obs_dim()),
                    o.len(),
                ));
            }
        }
        if e.action.len() != nets.action_dim() {
            return Err(shape_err(
                format!("actions of length {}", nets.action_dim()),
                e.action.len(),
            ));
        }
    }
    Ok(())
}

/// Mean squared TD error against `y = r + γ·Q′(o′, μ′(o′))` and its gradient w.r.t.
/// the critic parameters.
pub fn critic_loss_and_grads(
    nets: &AgentNets,
    batch: &[&Experience],
    gamma: f64,
) -> Result<(f64, Mlp)> {
    check_batch(nets, batch)?;
    let n = batch.len() as f64;
    let next_obs = stack(batch, |e| &e.next_obs)?;
    let (next_action, _) = nets.target_actor.forward(&next_obs)?;
    let (next_q, _) = nets
        .target_critic
        .forward(&next_obs.hstack(&next_action)?)?;
    let inputs = stack(batch, |e| &e.obs)?.hstack(&stack(batch, |e| &e.action)?)?;
    let (q, cache) = nets.critic.forward(&inputs)?;
    let mut loss = 0.0;
    let mut dl_dq = Batch::zeros(batch.len(), 1);
    for (i, e) in batch.iter().enumerate() {
        let y = e.reward + gamma * next_q.as_slice()[i];
        let err = q.as_slice()[i] - y;
        loss += err * err / n;
        dl_dq.as_mut_slice()[i] = 2.0 * err / n;
    }
    if !loss.is_finite() {
        return Err(Error::Training(format!("non-finite critic loss {loss}")));
    }
    let (grads, _) = nets.critic.backward(&cache, &dl_dq)?;
    Ok((loss, grads))
}

/// `J = mean_i Q(o_i, μ(o_i))` and `∇_θ J`, obtained by chaining the critic's input
/// gradient (restricted to the action slice) through the actor.
pub fn actor_objective_and_grads(nets: &AgentNets, batch: &[&Experience]) -> Result<(f64, Mlp)> {
    check_batch(nets, batch)?;
    let n = batch.len() as f64;
    let obs = stack(batch, |e| &e.obs)?;
    let (action, actor_cache) = nets.actor.forward(&obs)?;
    let (q, critic_cache) = nets.critic.forward(&obs.hstack(&action)?)?;
    let objective = q.as_slice().iter().sum::<f64>() / n;
    if !objective.is_finite() {
        return Err(Error::Training(format!(
            "non-finite actor objective {objective}"
        )));
    }
    let dj_dq = Batch::from_vec(batch.len(), 1, vec![1.0 / n; batch.len()])?;
    let (_, dj_dinput) = nets.critic.backward(&critic_cache, &dj_dq)?;
    let dj_da = dj_dinput.columns(nets.obs_dim(), dj_dinput.cols());
    let (grads, _) = nets.actor.backward(&actor_cache, &dj_da)?;
    Ok((objective, grads))
}

/// One optimizer step on the critic. Returns the loss before the step.
pub fn critic_update(
    nets: &mut AgentNets,
    batch: &[&Experience],
    gamma: f64,
    lr: f64,
    grad_clip: Option<f64>,
) -> Result<f64> {
    let (loss, mut grads) = critic_loss_and_grads(nets, batch, gamma)?;
    if let Some(c) = grad_clip {
        clip_global_norm(&mut grads, c);
    }
    nets.critic_opt.step(&mut nets.critic, &grads, lr)?;
    Ok(loss)
}

/// One ascent step on the actor objective. Returns the objective before the step.
pub fn actor_update(
    nets: &mut AgentNets,
    batch: &[&Experience],
    lr: f64,
    grad_clip: Option<f64>,
) -> Result<f64> {
    let (objective, mut grads) = actor_objective_and_grads(nets, batch)?;
    grads.params_mut().for_each(|g| *g = -*g);
    if let Some(c) = grad_clip {
        clip_global_norm(&mut grads, c);
    }
    nets.actor_opt.step(&mut nets.actor, &grads, lr)?;
    Ok(objective)
}
