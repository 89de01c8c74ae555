use super::agent::DdpgAgent;
use super::replay::Transition;
use crate::env::Environment;
use crate::error::Result;
use crate::rng::RngStream;
use crate::trace::{EpisodeTrace, StepRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Exploration noise, transition storage and one update per warm step.
    Train,
    /// Noise-free; the agent is not modified.
    Eval,
}

/// Resets `env` with `rng` and runs one full episode.
pub fn run_episode(
    agent: &mut DdpgAgent,
    env: &mut dyn Environment,
    rng: RngStream,
    mode: Mode,
) -> Result<EpisodeTrace> {
    match mode {
        Mode::Eval => {
            let agent = &*agent;
            run_policy_episode(env, rng, |obs| agent.act(obs))
        }
        Mode::Train => {
            agent.noise.reset();
            let mut obs = env.reset(rng);
            let mut records = Vec::with_capacity(env.horizon());
            loop {
                let action = agent.select_action(&obs, true)?;
                let step = env.step(&action)?;
                let done = step.done;
                agent.store(Transition {
                    state: std::mem::take(&mut obs),
                    action,
                    reward: step.reward,
                    next_state: step.observation.clone(),
                    done,
                })?;
                agent.train_from_buffer()?;
                obs = step.observation.clone();
                records.push(StepRecord::from(step));
                if done {
                    break;
                }
            }
            Ok(EpisodeTrace { records })
        }
    }
}

/// Resets `env` with `rng` and runs one episode under a fixed policy.
pub fn run_policy_episode(
    env: &mut dyn Environment,
    rng: RngStream,
    mut policy: impl FnMut(&[f64]) -> Result<Vec<f64>>,
) -> Result<EpisodeTrace> {
    let mut obs = env.reset(rng);
    let mut records = Vec::with_capacity(env.horizon());
    loop {
        let action = policy(&obs)?;
        let step = env.step(&action)?;
        let done = step.done;
        obs = step.observation.clone();
        records.push(StepRecord::from(step));
        if done {
            return Ok(EpisodeTrace { records });
        }
    }
}
