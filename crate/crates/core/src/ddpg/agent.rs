use ndarray::{concatenate, s, Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::noise::{OuConfig, OuNoise};
use super::replay::{ReplayBuffer, Transition};
use crate::error::{Error, Result};
use crate::nn::{
    forward, init_params, soft_update, Activation, AdamConfig, AdamState, Architecture, GradTarget,
    Mlp,
};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DdpgConfig {
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Stored transitions required before the first update.
    pub warmup: usize,
    /// Hidden widths shared by actor and critic.
    pub hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub noise: OuConfig,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            batch_size: 128,
            buffer_capacity: 100_000,
            warmup: 1000,
            hidden: vec![128, 128],
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            noise: OuConfig::default(),
        }
    }
}

impl DdpgConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must be in [0, 1)");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must be in (0, 1]");
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 {
            return bad("batch_size and buffer_capacity must be positive");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return bad("hidden widths must be positive");
        }
        if !(self.noise.theta >= 0.0
            && self.noise.sigma >= 0.0
            && self.noise.sigma_final >= 0.0
            && self.noise.dt > 0.0)
        {
            return bad("noise parameters out of range");
        }
        Ok(())
    }

    pub fn actor_architecture(&self, obs_dim: usize, action_dim: usize) -> Architecture {
        Architecture::mlp(obs_dim, &self.hidden, action_dim, Activation::Tanh)
    }

    pub fn critic_architecture(&self, obs_dim: usize, action_dim: usize) -> Architecture {
        Architecture::mlp(obs_dim + action_dim, &self.hidden, 1, Activation::Identity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStats {
    pub critic_loss: f64,
    /// Mean of Q(s, pi(s)) over the batch before the actor update.
    pub actor_objective: f64,
}

/// Actor, critic, their targets, optimizers, replay memory and exploration noise.
#[derive(Debug, Clone)]
pub struct DdpgAgent {
    config: DdpgConfig,
    obs_dim: usize,
    action_dim: usize,
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    actor_opt: AdamState,
    critic_opt: AdamState,
    pub buffer: ReplayBuffer,
    pub noise: OuNoise,
    rng: RngStream,
    updates: u64,
}

struct Batch {
    states: Array2<f64>,
    actions: Array2<f64>,
    rewards: Array1<f64>,
    next_states: Array2<f64>,
    not_done: Array1<f64>,
}

impl DdpgAgent {
    /// Networks are drawn from `init_rng`; noise and replay sampling use `learner_rng`.
    pub fn new(
        obs_dim: usize,
        action_dim: usize,
        config: DdpgConfig,
        init_rng: &mut RngStream,
        learner_rng: RngStream,
    ) -> Result<Self> {
        config.validate()?;
        let actor = init_params(&config.actor_architecture(obs_dim, action_dim), init_rng);
        let critic = init_params(&config.critic_architecture(obs_dim, action_dim), init_rng);
        Ok(Self {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor_opt: AdamState::new(AdamConfig::with_lr(config.actor_lr), actor.param_count()),
            critic_opt: AdamState::new(AdamConfig::with_lr(config.critic_lr), critic.param_count()),
            buffer: ReplayBuffer::new(config.buffer_capacity),
            noise: OuNoise::new(
                action_dim,
                config.noise.theta,
                config.noise.sigma,
                config.noise.dt,
            ),
            actor,
            critic,
            config,
            obs_dim,
            action_dim,
            rng: learner_rng,
            updates: 0,
        })
    }

    pub fn config(&self) -> &DdpgConfig {
        &self.config
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn rng(&self) -> &RngStream {
        &self.rng
    }

    /// Deterministic policy output, clipped to [-1, 1].
    pub fn act(&self, observation: &[f64]) -> Result<Vec<f64>> {
        let mut a = forward(&self.actor, observation)?;
        a.iter_mut().for_each(|x| *x = x.clamp(-1.0, 1.0));
        Ok(a)
    }

    /// Policy output plus OU noise when exploring, clipped to [-1, 1].
    pub fn select_action(&mut self, observation: &[f64], explore: bool) -> Result<Vec<f64>> {
        let mut a = forward(&self.actor, observation)?;
        if explore {
            let n = self.noise.sample(&mut self.rng);
            a.iter_mut().zip(n).for_each(|(x, n)| *x += n);
        }
        a.iter_mut().for_each(|x| *x = x.clamp(-1.0, 1.0));
        Ok(a)
    }

    pub fn store(&mut self, transition: Transition) -> Result<()> {
        if transition.state.len() != self.obs_dim || transition.next_state.len() != self.obs_dim {
            return Err(Error::DimensionMismatch {
                expected: self.obs_dim,
                actual: transition.state.len(),
            });
        }
        if transition.action.len() != self.action_dim {
            return Err(Error::DimensionMismatch {
                expected: self.action_dim,
                actual: transition.action.len(),
            });
        }
        self.buffer.store(transition);
        Ok(())
    }

    /// Whether the buffer holds enough experience for an update.
    pub fn is_warm(&self) -> bool {
        self.buffer.len() >= self.config.warmup.max(self.config.batch_size)
    }

    /// Samples a minibatch from the buffer and runs [`Self::train_step`].
    pub fn train_from_buffer(&mut self) -> Result<Option<TrainStats>> {
        if !self.is_warm() {
            return Ok(None);
        }
        let batch: Vec<Transition> = self
            .buffer
            .sample(self.config.batch_size, &mut self.rng)
            .into_iter()
            .cloned()
            .collect();
        self.train_step(&batch).map(Some)
    }

    /// One critic regression step, one actor ascent step, then soft target updates.
    pub fn train_step(&mut self, batch: &[Transition]) -> Result<TrainStats> {
        let b = self.pack(batch)?;
        let critic_loss = self.critic_update(&b)?;
        let actor_objective = self.actor_update(&b.states)?;
        soft_update(&mut self.actor_target, &self.actor, self.config.tau)?;
        soft_update(&mut self.critic_target, &self.critic, self.config.tau)?;
        self.updates += 1;
        Ok(TrainStats {
            critic_loss,
            actor_objective,
        })
    }

    /// Critic-only regression step against the current (unchanged) targets.
    /// Returns the loss before the step.
    pub fn critic_step(&mut self, batch: &[Transition]) -> Result<f64> {
        let b = self.pack(batch)?;
        self.critic_update(&b)
    }

    /// TD targets r + gamma (1 - done) Q'(s', pi'(s')).
    pub fn td_targets(&self, batch: &[Transition]) -> Result<Vec<f64>> {
        let b = self.pack(batch)?;
        Ok(self.targets(&b)?.to_vec())
    }

    fn targets(&self, b: &Batch) -> Result<Array1<f64>> {
        let next_actions = self.actor_target.forward_batch(b.next_states.view())?;
        let q_next = self
            .critic_target
            .forward_batch(concatenate![Axis(1), b.next_states, next_actions].view())?;
        Ok(&b.rewards + &(self.config.gamma * &b.not_done * &q_next.column(0)))
    }

    fn critic_update(&mut self, b: &Batch) -> Result<f64> {
        let y = self.targets(b)?;
        let input = concatenate![Axis(1), b.states, b.actions];
        let cache = self.critic.forward_cached(input.view())?;
        let q = cache.output().column(0);
        let n = y.len() as f64;
        let residual = &q - &y;
        let loss = residual.mapv(|r| r * r).sum() / n;
        let grad = (residual * (2.0 / n)).insert_axis(Axis(1));
        let grads = self
            .critic
            .backward_batch(&cache, grad.view(), GradTarget::Params)?;
        self.critic_opt.step_mlp(&mut self.critic, &grads)?;
        Ok(loss)
    }

    fn actor_update(&mut self, states: &Array2<f64>) -> Result<f64> {
        let actor_cache = self.actor.forward_cached(states.view())?;
        let actions = actor_cache.output();
        let critic_cache = self
            .critic
            .forward_cached(concatenate![Axis(1), *states, *actions].view())?;
        let n = states.nrows() as f64;
        let objective = critic_cache.output().sum() / n;
        // minimize -mean Q
        let dq = Array2::from_elem((states.nrows(), 1), -1.0 / n);
        let critic_grads =
            self.critic
                .backward_batch(&critic_cache, dq.view(), GradTarget::Input)?;
        let d_action = critic_grads.input.slice(s![.., self.obs_dim..]);
        let actor_grads = self
            .actor
            .backward_batch(&actor_cache, d_action, GradTarget::Params)?;
        self.actor_opt.step_mlp(&mut self.actor, &actor_grads)?;
        Ok(objective)
    }

    fn pack(&self, batch: &[Transition]) -> Result<Batch> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let n = batch.len();
        let mut states = Array2::zeros((n, self.obs_dim));
        let mut next_states = Array2::zeros((n, self.obs_dim));
        let mut actions = Array2::zeros((n, self.action_dim));
        for (i, t) in batch.iter().enumerate() {
            if t.state.len() != self.obs_dim || t.next_state.len() != self.obs_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.obs_dim,
                    actual: t.state.len(),
                });
            }
            if t.action.len() != self.action_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.action_dim,
                    actual: t.action.len(),
                });
            }
            states
                .row_mut(i)
                .assign(&ndarray::ArrayView1::from(&t.state));
            next_states
                .row_mut(i)
                .assign(&ndarray::ArrayView1::from(&t.next_state));
            actions
                .row_mut(i)
                .assign(&ndarray::ArrayView1::from(&t.action));
        }
        Ok(Batch {
            states,
            actions,
            next_states,
            rewards: batch.iter().map(|t| t.reward).collect(),
            not_done: batch
                .iter()
                .map(|t| if t.done { 0.0 } else { 1.0 })
                .collect(),
        })
    }
}
