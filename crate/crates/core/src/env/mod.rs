//! Episodic opinion-shaping environments.

mod advertising;
mod bot;

pub use advertising::{
    advertising_cost, apply_advertisement, reward_adv, AdAction, AdvEnvConfig, AdvertisingEnv,
};
pub use bot::{reward_bot, BotEnv, BotEnvConfig};

use crate::error::Result;
use crate::rng::RngStream;

/// What an environment step reports besides observation and reward.
#[derive(Debug, Clone, PartialEq)]
pub enum StepDetail {
    Bot {
        bots: Vec<f64>,
        users: Vec<f64>,
    },
    Advertising {
        cost: f64,
        budget: f64,
        location: f64,
        range: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// Time-step reached by this step, 1..=T.
    pub t: usize,
    /// User mean and population std after the step.
    pub mean: f64,
    pub std: f64,
    pub detail: StepDetail,
}

/// Gym-style interface shared by both scenarios and by test environments.
///
/// Actions are raw actor outputs in [-1, 1]^action_dim; each environment maps
/// them onto its own action space.
pub trait Environment {
    fn observation_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn horizon(&self) -> usize;
    fn reset(&mut self, rng: RngStream) -> Vec<f64>;
    fn step(&mut self, action: &[f64]) -> Result<StepResult>;
    /// Current user opinions.
    fn users(&self) -> &[f64];
}

/// Normalized time component t/T.
pub(crate) fn time_fraction(t: usize, horizon: usize) -> f64 {
    t as f64 / horizon as f64
}

pub(crate) fn sample_initial_users(n: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..n).map(|_| rng.uniform_open(-1.0, 1.0)).collect()
}
