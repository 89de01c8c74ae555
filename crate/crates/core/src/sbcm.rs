//! Stochastic bounded confidence dynamics.
//!
//! Each user samples interaction partners from the other users and all bots
//! with probability proportional to `max(|x_u - x_v|, floor)^(-epsilon)`, then
//! moves toward the average of the sampled opinions by a fraction `mu`.
//!
//! Draw protocol, relied on by the replay oracles in the tests: users are
//! processed in index order; each of the `k` picks of a user consumes exactly
//! one uniform draw `r` and selects the first candidate whose cumulative weight
//! exceeds `r * total`, where `total` is the weight still unpicked.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// User and bot opinions at one time-step.
///
/// Candidates are addressed in a combined index space: `0..n_users` are users,
/// `n_users..n_users + n_bots` are bots.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionState {
    pub users: Vec<f64>,
    pub bots: Vec<f64>,
}

impl OpinionState {
    pub fn new(users: Vec<f64>, bots: Vec<f64>) -> Self {
        Self { users, bots }
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    /// Opinion at a combined user/bot index.
    pub fn opinion_at(&self, index: usize) -> f64 {
        if index < self.users.len() {
            self.users[index]
        } else {
            self.bots[index - self.users.len()]
        }
    }

    pub fn is_finite(&self) -> bool {
        self.users.iter().chain(&self.bots).all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SbcmParams {
    /// Fraction of the gap to the sampled neighbors closed per step.
    pub mu: f64,
    /// Signed exponent: weights go as distance^(-epsilon).
    pub epsilon: f64,
    pub k_neighbors: usize,
    /// Lower bound on distances inside the power.
    pub distance_floor: f64,
    pub clamp_opinions: bool,
}

impl Default for SbcmParams {
    fn default() -> Self {
        Self {
            mu: 0.1,
            epsilon: -2.0,
            k_neighbors: 1,
            distance_floor: 1e-6,
            clamp_opinions: true,
        }
    }
}

impl SbcmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "mu must be in (0, 1], got {}",
                self.mu
            )));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::InvalidConfig("epsilon must be finite".into()));
        }
        if self.k_neighbors == 0 {
            return Err(Error::InvalidConfig(
                "k_neighbors must be at least 1".into(),
            ));
        }
        if !(self.distance_floor > 0.0 && self.distance_floor.is_finite()) {
            return Err(Error::InvalidConfig(
                "distance_floor must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Interaction probabilities of a user at `x_u` over `candidates`.
pub fn interaction_weights(
    x_u: f64,
    candidates: &[f64],
    epsilon: f64,
    distance_floor: f64,
) -> Result<Vec<f64>> {
    if candidates.is_empty() {
        return Err(Error::NoInteractionPartners);
    }
    let mut weights: Vec<f64> = candidates
        .iter()
        .map(|&x_v| (x_u - x_v).abs().max(distance_floor).powf(-epsilon))
        .collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// Draws `k` distinct positions from unnormalized `weights` without replacement.
pub(crate) fn draw_without_replacement(
    weights: &mut [f64],
    k: usize,
    rng: &mut RngStream,
) -> Vec<usize> {
    let k = k.min(weights.len());
    let mut picked = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = weights.iter().sum();
        let target = rng.uniform() * total;
        let mut acc = 0.0;
        // Falls back to the last remaining candidate when rounding leaves
        // `target` at or above the accumulated sum.
        let mut choice = None;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            choice = Some(i);
            if acc > target {
                break;
            }
        }
        let i = choice.expect("at least one candidate with positive weight");
        weights[i] = 0.0;
        picked.push(i);
    }
    picked
}

/// Samples the neighbor set of user `u` as combined user/bot indices.
pub fn sample_neighbors(
    u: usize,
    state: &OpinionState,
    params: &SbcmParams,
    rng: &mut RngStream,
) -> Result<Vec<usize>> {
    let n = state.users.len();
    let pool: Vec<usize> = (0..n + state.bots.len()).filter(|&i| i != u).collect();
    if pool.is_empty() {
        return Err(Error::NoInteractionPartners);
    }
    let opinions: Vec<f64> = pool.iter().map(|&i| state.opinion_at(i)).collect();
    let mut weights = interaction_weights(
        state.users[u],
        &opinions,
        params.epsilon,
        params.distance_floor,
    )?;
    Ok(
        draw_without_replacement(&mut weights, params.k_neighbors, rng)
            .into_iter()
            .map(|p| pool[p])
            .collect(),
    )
}

/// One synchronous SBCM step: every user updates from the time-t snapshot.
/// Bots are never modified.
pub fn step_opinions(
    state: &OpinionState,
    params: &SbcmParams,
    rng: &mut RngStream,
) -> Result<OpinionState> {
    let mut users = state.users.clone();
    for (u, next) in users.iter_mut().enumerate() {
        let neighbors = sample_neighbors(u, state, params, rng)?;
        let x_u = state.users[u];
        let pull: f64 = neighbors.iter().map(|&v| state.opinion_at(v) - x_u).sum();
        *next = x_u + params.mu / neighbors.len() as f64 * pull;
        if params.clamp_opinions {
            *next = next.clamp(-1.0, 1.0);
        }
    }
    Ok(OpinionState {
        users,
        bots: state.bots.clone(),
    })
}

/// Mean over users; bots excluded.
pub fn mean_opinion(state: &OpinionState) -> f64 {
    mean(&state.users)
}

/// Mean and population standard deviation of user opinions.
pub fn opinion_stats(state: &OpinionState) -> (f64, f64) {
    mean_std(&state.users)
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
    (m, var.sqrt())
}
