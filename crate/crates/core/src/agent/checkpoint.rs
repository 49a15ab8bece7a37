use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::AgentNets;
use crate::error::{Error, Result};
use crate::nn::{Mlp, NetworkDoc};

const FORMAT: &str = "irsnet-agent-v1";

/// On-disk form of one agent: its four networks keyed by role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentCheckpoint {
    pub format: String,
    pub agent_id: usize,
    pub networks: BTreeMap<String, NetworkDoc>,
}

impl AgentCheckpoint {
    pub fn from_nets(agent_id: usize, nets: &AgentNets) -> Self {
        let networks = [
            ("actor", &nets.actor),
            ("critic", &nets.critic),
            ("target_actor", &nets.target_actor),
            ("target_critic", &nets.target_critic),
        ]
        .into_iter()
        .map(|(k, n)| (k.to_string(), n.to_doc()))
        .collect();
        Self {
            format: FORMAT.into(),
            agent_id,
            networks,
        }
    }

    fn network(&self, role: &str) -> Result<Mlp> {
        let doc = self
            .networks
            .get(role)
            .ok_or_else(|| Error::Checkpoint(format!("missing network `{role}`")))?;
        Mlp::from_doc(doc)
    }

    /// Rebuilds the networks; optimizer moments start fresh.
    pub fn to_nets(&self) -> Result<AgentNets> {
        if self.format != FORMAT {
            return Err(Error::Checkpoint(format!(
                "unknown checkpoint format `{}`",
                self.format
            )));
        }
        let mut nets = AgentNets::from_networks(self.network("actor")?, self.network("critic")?);
        nets.target_actor = self.network("target_actor")?;
        nets.target_critic = self.network("target_critic")?;
        if !nets.target_actor.same_shape(&nets.actor)
            || !nets.target_critic.same_shape(&nets.critic)
        {
            return Err(Error::Checkpoint(
                "target networks do not match main networks".into(),
            ));
        }
        if nets.critic.input_dim() != nets.actor.input_dim() + nets.actor.output_dim() {
            return Err(Error::Checkpoint(
                "critic input does not match actor dimensions".into(),
            ));
        }
        Ok(nets)
    }
}

pub fn save_agent_checkpoint(path: &Path, agent_id: usize, nets: &AgentNets) -> Result<()> {
    let text = serde_json::to_string(&AgentCheckpoint::from_nets(agent_id, nets))?;
    fs::write(path, text)?;
    Ok(())
}

/// Loads an agent and checks it against the expected observation and action sizes.
pub fn load_agent_checkpoint(
    path: &Path,
    obs_dim: usize,
    action_dim: usize,
) -> Result<(usize, AgentNets)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    let ckpt: AgentCheckpoint = serde_json::from_str(&text)
        .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    let nets = ckpt.to_nets()?;
    if nets.obs_dim() != obs_dim || nets.action_dim() != action_dim {
        return Err(Error::Checkpoint(format!(
            "{}: network maps {} -> {}, configuration needs {obs_dim} -> {action_dim}",
            path.display(),
            nets.obs_dim(),
            nets.action_dim()
        )));
    }
    Ok((ckpt.agent_id, nets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.json");
        let mut nets = AgentNets::new(5, 3, &[4, 4], &mut seeded_rng(1, 0)).unwrap();
        nets.target_actor.params_mut().for_each(|v| *v *= 0.5);
        save_agent_checkpoint(&path, 2, &nets).unwrap();
        let (id, back) = load_agent_checkpoint(&path, 5, 3).unwrap();
        assert_eq!(id, 2);
        assert_eq!(back.actor, nets.actor);
        assert_eq!(back.critic, nets.critic);
        assert_eq!(back.target_actor, nets.target_actor);
        assert_eq!(back.target_critic, nets.target_critic);
        assert!(matches!(
            load_agent_checkpoint(&path, 6, 3),
            Err(Error::Checkpoint(_))
        ));
    }
}
