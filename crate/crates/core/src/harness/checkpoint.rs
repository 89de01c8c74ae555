//! Agent checkpoints: one directory holding the four networks in the binary
//! network format plus `meta.json`.
//!
//! ```text
//! actor.bin  critic.bin  actor_target.bin  critic_target.bin  meta.json
//! ```
//!
//! Optimizer moments and the replay buffer are not saved; a restored agent
//! acts identically but resumes learning from fresh moments.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::ddpg::DdpgAgent;
use crate::error::{Error, Result};
use crate::nn;
use crate::rng::{RngState, RngStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub config: RunConfig,
    pub episodes_completed: usize,
    pub updates: u64,
    pub obs_dim: usize,
    pub action_dim: usize,
    pub noise_sigma: f64,
    pub learner_rng: RngState,
}

const NETS: [&str; 4] = [
    "actor.bin",
    "critic.bin",
    "actor_target.bin",
    "critic_target.bin",
];

pub fn save_agent(
    agent: &DdpgAgent,
    config: &RunConfig,
    episodes_completed: usize,
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let nets = [
        &agent.actor,
        &agent.critic,
        &agent.actor_target,
        &agent.critic_target,
    ];
    for (name, net) in NETS.iter().zip(nets) {
        nn::save(net, dir.join(name))?;
    }
    let meta = CheckpointMeta {
        config: config.clone(),
        episodes_completed,
        updates: agent.updates(),
        obs_dim: agent.obs_dim(),
        action_dim: agent.action_dim(),
        noise_sigma: agent.noise.sigma,
        learner_rng: agent.rng().state(),
    };
    let path = dir.join("meta.json");
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(path, e))
}

pub fn load_agent(dir: &Path) -> Result<(DdpgAgent, CheckpointMeta)> {
    let path = dir.join("meta.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta: CheckpointMeta = serde_json::from_str(&text)?;
    let ddpg = meta.config.ddpg.clone();
    // Networks are overwritten below; the init stream only fixes shapes.
    let mut agent = DdpgAgent::new(
        meta.obs_dim,
        meta.action_dim,
        ddpg.clone(),
        &mut RngStream::new(0),
        RngStream::from_state(&meta.learner_rng),
    )?;
    let expected = [
        ddpg.actor_architecture(meta.obs_dim, meta.action_dim),
        ddpg.critic_architecture(meta.obs_dim, meta.action_dim),
    ];
    let mut nets = Vec::with_capacity(4);
    for (i, name) in NETS.iter().enumerate() {
        let net = nn::load(dir.join(name))?;
        if net.architecture() != expected[i % 2] {
            return Err(Error::ArchitectureMismatch(format!(
                "{name} does not match the recorded config"
            )));
        }
        nets.push(net);
    }
    agent.critic_target = nets.pop().unwrap();
    agent.actor_target = nets.pop().unwrap();
    agent.critic = nets.pop().unwrap();
    agent.actor = nets.pop().unwrap();
    agent.noise.sigma = meta.noise_sigma;
    Ok((agent, meta))
}
