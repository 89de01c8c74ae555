use serde::{Deserialize, Serialize};

use super::{sample_initial_users, time_fraction, Environment, StepDetail, StepResult};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sbcm::{
    draw_without_replacement, interaction_weights, mean_std, step_opinions, OpinionState,
    SbcmParams,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdvEnvConfig {
    pub n_users: usize,
    pub horizon: usize,
    pub initial_budget: f64,
    #[serde(default = "default_scale")]
    pub cost_range_scale: f64,
    #[serde(default = "default_scale")]
    pub cost_opinion_scale: f64,
    #[serde(default = "default_exponent")]
    pub range_exponent: f64,
    #[serde(default = "default_exponent")]
    pub opinion_exponent: f64,
    /// When set, only this many in-range users (drawn with SBCM weights toward
    /// the ad location) see the ad each step; otherwise all in-range users do.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ad_sample: Option<usize>,
    #[serde(default)]
    pub sbcm: SbcmParams,
}

fn default_scale() -> f64 {
    0.05
}

fn default_exponent() -> f64 {
    1.5
}

impl AdvEnvConfig {
    pub fn new(n_users: usize, horizon: usize, initial_budget: f64, sbcm: SbcmParams) -> Self {
        Self {
            n_users,
            horizon,
            initial_budget,
            cost_range_scale: default_scale(),
            cost_opinion_scale: default_scale(),
            range_exponent: default_exponent(),
            opinion_exponent: default_exponent(),
            ad_sample: None,
            sbcm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.n_users < 2 {
            return bad("n_users must be at least 2");
        }
        if self.horizon < 1 {
            return bad("horizon must be at least 1");
        }
        if !(self.initial_budget >= 0.0 && self.initial_budget.is_finite()) {
            return bad("initial_budget must be a nonnegative number");
        }
        if !(self.cost_range_scale >= 0.0 && self.cost_opinion_scale >= 0.0) {
            return bad("cost scales must be nonnegative");
        }
        if !(self.range_exponent > 0.0 && self.opinion_exponent > 0.0) {
            return bad("cost exponents must be positive");
        }
        if self.ad_sample == Some(0) {
            return bad("ad_sample must be at least 1 when set");
        }
        self.sbcm.validate()
    }
}

/// Advertised opinion and the opinion-axis half-width of its audience.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdAction {
    pub location: f64,
    pub range: f64,
}

impl AdAction {
    pub fn new(location: f64, range: f64) -> Self {
        Self {
            location: location.clamp(-1.0, 1.0),
            range: range.clamp(0.0, 1.0),
        }
    }

    /// Maps a raw actor output in [-1, 1]^2: location is taken as is, range
    /// is rescaled from [-1, 1] onto [0, 1].
    pub fn from_raw(raw: &[f64]) -> Self {
        Self::new(raw[0], (raw[1] + 1.0) / 2.0)
    }

    pub fn in_range(&self, opinion: f64) -> bool {
        (opinion - self.location).abs() <= self.range
    }
}

/// Price of one advertisement: exponential in range and in |location|.
pub fn advertising_cost(action: &AdAction, config: &AdvEnvConfig) -> f64 {
    let range = config.cost_range_scale * ((action.range * config.range_exponent).exp() - 1.0);
    let opinion =
        config.cost_opinion_scale * ((action.location.abs() * config.opinion_exponent).exp() - 1.0);
    range + opinion
}

/// Pulls in-range users toward the ad location by a fraction `mu`.
///
/// With `sample = Some(k)`, only `k` in-range users drawn without
/// replacement with SBCM weights toward the location are pulled.
pub fn apply_advertisement(
    state: &OpinionState,
    action: &AdAction,
    params: &SbcmParams,
    sample: Option<usize>,
    rng: &mut RngStream,
) -> OpinionState {
    let audience: Vec<usize> = (0..state.users.len())
        .filter(|&u| action.in_range(state.users[u]))
        .collect();
    let targets = match sample {
        Some(k) if k < audience.len() => {
            let opinions: Vec<f64> = audience.iter().map(|&u| state.users[u]).collect();
            let mut weights = interaction_weights(
                action.location,
                &opinions,
                params.epsilon,
                params.distance_floor,
            )
            .expect("audience is non-empty");
            draw_without_replacement(&mut weights, k, rng)
                .into_iter()
                .map(|i| audience[i])
                .collect()
        }
        _ => audience,
    };
    let mut next = state.clone();
    for u in targets {
        let x = state.users[u];
        next.users[u] = x + params.mu * (action.location - x);
    }
    next
}

/// Time-scaled mean shift, minus this step's cost once the budget is overspent.
pub fn reward_adv(
    mean_prev: f64,
    mean_next: f64,
    t: usize,
    horizon: usize,
    budget_after: f64,
    step_cost: f64,
) -> f64 {
    let base = time_fraction(t, horizon) * (mean_next - mean_prev);
    if budget_after >= 0.0 {
        base
    } else {
        base - step_cost
    }
}

/// Budget-constrained advertising scenario.
#[derive(Debug, Clone)]
pub struct AdvertisingEnv {
    config: AdvEnvConfig,
    state: OpinionState,
    budget: f64,
    t: usize,
    rng: RngStream,
}

impl AdvertisingEnv {
    pub fn new(config: AdvEnvConfig) -> Result<Self> {
        config.validate()?;
        let state = OpinionState::new(vec![0.0; config.n_users], Vec::new());
        let budget = config.initial_budget;
        Ok(Self {
            config,
            state,
            budget,
            t: 0,
            rng: RngStream::new(0),
        })
    }

    pub fn config(&self) -> &AdvEnvConfig {
        &self.config
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn state(&self) -> &OpinionState {
        &self.state
    }

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

    fn observation(&self) -> Vec<f64> {
        let mut obs = self.state.users.clone();
        obs.push(time_fraction(self.t, self.config.horizon));
        obs.push(if self.config.initial_budget > 0.0 {
            self.budget / self.config.initial_budget
        } else {
            0.0
        });
        obs
    }

    /// Advances one step with an already-mapped advertisement.
    pub fn step_ad(&mut self, action: AdAction) -> Result<StepResult> {
        if self.t >= self.config.horizon {
            return Err(Error::EpisodeDone);
        }
        let action = AdAction::new(action.location, action.range);
        let cost = advertising_cost(&action, &self.config);
        self.budget -= cost;
        let (mean_prev, _) = mean_std(&self.state.users);
        let advertised = apply_advertisement(
            &self.state,
            &action,
            &self.config.sbcm,
            self.config.ad_sample,
            &mut self.rng,
        );
        self.state = step_opinions(&advertised, &self.config.sbcm, &mut self.rng)?;
        self.t += 1;
        let (mean, std) = mean_std(&self.state.users);
        Ok(StepResult {
            observation: self.observation(),
            reward: reward_adv(
                mean_prev,
                mean,
                self.t,
                self.config.horizon,
                self.budget,
                cost,
            ),
            done: self.t == self.config.horizon,
            t: self.t,
            mean,
            std,
            detail: StepDetail::Advertising {
                cost,
                budget: self.budget,
                location: action.location,
                range: action.range,
            },
        })
    }
}

impl Environment for AdvertisingEnv {
    fn observation_dim(&self) -> usize {
        self.config.n_users + 2
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.config.horizon
    }

    fn reset(&mut self, mut rng: RngStream) -> Vec<f64> {
        self.state = OpinionState::new(
            sample_initial_users(self.config.n_users, &mut rng),
            Vec::new(),
        );
        self.budget = self.config.initial_budget;
        self.t = 0;
        self.rng = rng;
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        if action.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: action.len(),
            });
        }
        self.step_ad(AdAction::from_raw(action))
    }

    fn users(&self) -> &[f64] {
        &self.state.users
    }
}
