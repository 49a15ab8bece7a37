//! Per-BS DDPG agents: action encoding, replay, updates and the multi-agent training loop.

mod action;
mod checkpoint;
mod nets;
mod replay;
mod train;

pub use action::{assign_irs, decode_action, resolve_association, DecodedAction, RawAction};
pub use checkpoint::{load_agent_checkpoint, save_agent_checkpoint, AgentCheckpoint};
pub use nets::{
    act, actor_objective_and_grads, actor_update, critic_loss_and_grads, critic_update, AgentNets,
};
pub use replay::{Experience, ReplayBuffer};
pub use train::{
    apply_raw_actions, noise_std_at, train, Agent, HyperParams, SlotConfig, StepRecord, Trainer,
    TrainingLog,
};
