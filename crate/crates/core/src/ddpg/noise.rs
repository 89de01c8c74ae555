use serde::{Deserialize, Serialize};

use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuConfig {
    /// Mean-reversion rate.
    pub theta: f64,
    /// Volatility at the start of training.
    pub sigma: f64,
    /// Volatility reached by the last training episode (linear schedule).
    pub sigma_final: f64,
    pub dt: f64,
}

impl Default for OuConfig {
    fn default() -> Self {
        Self {
            theta: 0.15,
            sigma: 0.2,
            sigma_final: 0.05,
            dt: 1.0,
        }
    }
}

impl OuConfig {
    /// Volatility for training episode `episode` of `episodes`.
    pub fn sigma_at(&self, episode: usize, episodes: usize) -> f64 {
        if episodes <= 1 {
            return self.sigma;
        }
        let frac = episode as f64 / (episodes - 1) as f64;
        self.sigma + (self.sigma_final - self.sigma) * frac
    }
}

/// Euler-discretized Ornstein-Uhlenbeck process with long-run mean zero.
#[derive(Debug, Clone, PartialEq)]
pub struct OuNoise {
    pub theta: f64,
    pub sigma: f64,
    pub dt: f64,
    state: Vec<f64>,
}

impl OuNoise {
    pub fn new(dim: usize, theta: f64, sigma: f64, dt: f64) -> Self {
        Self {
            theta,
            sigma,
            dt,
            state: vec![0.0; dim],
        }
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn set_state(&mut self, state: Vec<f64>) {
        self.state = state;
    }

    /// Advances the process one increment and returns the new state.
    pub fn sample(&mut self, rng: &mut RngStream) -> Vec<f64> {
        let diffusion = self.sigma * self.dt.sqrt();
        for x in &mut self.state {
            *x += self.theta * (0.0 - *x) * self.dt + diffusion * rng.gaussian();
        }
        self.state.clone()
    }
}
