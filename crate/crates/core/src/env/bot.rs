use serde::{Deserialize, Serialize};

use super::{sample_initial_users, time_fraction, Environment, StepDetail, StepResult};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sbcm::{mean_std, step_opinions, OpinionState, SbcmParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BotEnvConfig {
    pub n_users: usize,
    pub n_bots: usize,
    pub horizon: usize,
    #[serde(default)]
    pub sbcm: SbcmParams,
}

impl BotEnvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users < 2 {
            return Err(Error::InvalidConfig("n_users must be at least 2".into()));
        }
        if self.n_bots < 1 {
            return Err(Error::InvalidConfig("n_bots must be at least 1".into()));
        }
        if self.horizon < 1 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        self.sbcm.validate()
    }
}

/// Time-scaled mean-opinion shift.
pub fn reward_bot(mean_prev: f64, mean_next: f64, t: usize, horizon: usize) -> f64 {
    time_fraction(t, horizon) * (mean_next - mean_prev)
}

/// User-bot scenario: the action sets every bot's opinion, then users take
/// one SBCM step with the bots in their candidate pool.
#[derive(Debug, Clone)]
pub struct BotEnv {
    config: BotEnvConfig,
    state: OpinionState,
    t: usize,
    rng: RngStream,
}

impl BotEnv {
    pub fn new(config: BotEnvConfig) -> Result<Self> {
        config.validate()?;
        let state = OpinionState::new(vec![0.0; config.n_users], vec![0.0; config.n_bots]);
        // Placeholder stream; `reset` installs the episode's stream.
        Ok(Self {
            config,
            state,
            t: 0,
            rng: RngStream::new(0),
        })
    }

    pub fn config(&self) -> &BotEnvConfig {
        &self.config
    }

    pub fn state(&self) -> &OpinionState {
        &self.state
    }

    /// Overwrites the user opinions, keeping the episode clock.
    pub fn set_users(&mut self, users: Vec<f64>) -> Result<()> {
        if users.len() != self.config.n_users {
            return Err(Error::DimensionMismatch {
                expected: self.config.n_users,
                actual: users.len(),
            });
        }
        self.state.users = users;
        Ok(())
    }

    pub fn time(&self) -> usize {
        self.t
    }

    fn observation(&self) -> Vec<f64> {
        let mut obs = self.state.users.clone();
        obs.push(time_fraction(self.t, self.config.horizon));
        obs
    }
}

impl Environment for BotEnv {
    fn observation_dim(&self) -> usize {
        self.config.n_users + 1
    }

    fn action_dim(&self) -> usize {
        self.config.n_bots
    }

    fn horizon(&self) -> usize {
        self.config.horizon
    }

    fn reset(&mut self, mut rng: RngStream) -> Vec<f64> {
        self.state = OpinionState::new(
            sample_initial_users(self.config.n_users, &mut rng),
            vec![0.0; self.config.n_bots],
        );
        self.t = 0;
        self.rng = rng;
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        if self.t >= self.config.horizon {
            return Err(Error::EpisodeDone);
        }
        if action.len() != self.config.n_bots {
            return Err(Error::DimensionMismatch {
                expected: self.config.n_bots,
                actual: action.len(),
            });
        }
        for (bot, &a) in self.state.bots.iter_mut().zip(action) {
            *bot = a.clamp(-1.0, 1.0);
        }
        let (mean_prev, _) = mean_std(&self.state.users);
        self.state = step_opinions(&self.state, &self.config.sbcm, &mut self.rng)?;
        self.t += 1;
        let (mean, std) = mean_std(&self.state.users);
        Ok(StepResult {
            observation: self.observation(),
            reward: reward_bot(mean_prev, mean, self.t, self.config.horizon),
            done: self.t == self.config.horizon,
            t: self.t,
            mean,
            std,
            detail: StepDetail::Bot {
                bots: self.state.bots.clone(),
                users: self.state.users.clone(),
            },
        })
    }

    fn users(&self) -> &[f64] {
        &self.state.users
    }
}
