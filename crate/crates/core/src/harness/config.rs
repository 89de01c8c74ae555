use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ddpg::DdpgConfig;
use crate::env::{AdvEnvConfig, AdvertisingEnv, BotEnv, BotEnvConfig, Environment};
use crate::error::{Error, Result};
use crate::sbcm::SbcmParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Bot,
    Advertising,
}

impl Scenario {
    /// Discount used by the presets.
    pub fn preset_gamma(self) -> f64 {
        match self {
            Scenario::Bot => 0.5,
            Scenario::Advertising => 0.9,
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bot" => Ok(Scenario::Bot),
            "advertising" | "adv" => Ok(Scenario::Advertising),
            other => Err(Error::InvalidConfig(format!("unknown scenario {other:?}"))),
        }
    }
}

/// Complete description of one experiment.
///
/// The output directory is where artifacts go, not part of the experiment, so
/// it is left out of serialized config echoes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub episodes: usize,
    pub eval_episodes: usize,
    #[serde(default = "default_output_dir", skip_serializing)]
    pub output_dir: PathBuf,
    /// Write a checkpoint every this many training episodes; 0 keeps only the final one.
    #[serde(default)]
    pub checkpoint_every: usize,
    /// Record wall-clock times in logs and reports; off yields byte-reproducible output.
    #[serde(default = "default_true")]
    pub record_wall_clock: bool,
    /// Number of evaluation episode traces written next to a report.
    #[serde(default = "default_trace_count")]
    pub eval_traces: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bot: Option<BotEnvConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advertising: Option<AdvEnvConfig>,
    #[serde(default)]
    pub ddpg: DdpgConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn default_true() -> bool {
    true
}

fn default_trace_count() -> usize {
    1
}

impl RunConfig {
    /// CI-sized defaults: 50 users, 100 steps, 300 episodes, 100 evaluation
    /// episodes, 64-unit hidden layers.
    pub fn desk(scenario: Scenario) -> Self {
        let mut config = Self::preset(scenario, 50, 100, 300, 100, 10, 10.0);
        config.ddpg.hidden = vec![64, 64];
        config
    }

    /// Full-size setting: 200 users, 200 steps, 1700 episodes, 1000 evaluation episodes.
    pub fn full(scenario: Scenario) -> Self {
        Self::preset(scenario, 200, 200, 1700, 1000, 20, 20.0)
    }

    fn preset(
        scenario: Scenario,
        n_users: usize,
        horizon: usize,
        episodes: usize,
        eval_episodes: usize,
        n_bots: usize,
        budget: f64,
    ) -> Self {
        let sbcm = SbcmParams {
            mu: 0.1,
            epsilon: -2.0,
            ..SbcmParams::default()
        };
        let (bot, advertising) = match scenario {
            Scenario::Bot => (
                Some(BotEnvConfig {
                    n_users,
                    n_bots,
                    horizon,
                    sbcm,
                }),
                None,
            ),
            Scenario::Advertising => (
                None,
                Some(AdvEnvConfig::new(n_users, horizon, budget, sbcm)),
            ),
        };
        Self {
            scenario,
            seed: 0,
            episodes,
            eval_episodes,
            output_dir: default_output_dir(),
            checkpoint_every: 50,
            record_wall_clock: true,
            eval_traces: 1,
            bot,
            advertising,
            ddpg: DdpgConfig {
                gamma: scenario.preset_gamma(),
                ..DdpgConfig::default()
            },
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes < 1 {
            return Err(Error::InvalidConfig("episodes must be at least 1".into()));
        }
        if self.eval_episodes < 1 {
            return Err(Error::InvalidConfig(
                "eval_episodes must be at least 1".into(),
            ));
        }
        match (self.scenario, &self.bot, &self.advertising) {
            (Scenario::Bot, Some(bot), None) => bot.validate()?,
            (Scenario::Advertising, None, Some(adv)) => adv.validate()?,
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "scenario {:?} needs exactly its own environment section",
                    self.scenario
                )))
            }
        }
        self.ddpg.validate()
    }

    pub fn sbcm_mut(&mut self) -> &mut SbcmParams {
        match (&mut self.bot, &mut self.advertising) {
            (Some(b), _) => &mut b.sbcm,
            (_, Some(a)) => &mut a.sbcm,
            _ => panic!("config has no environment section"),
        }
    }

    pub fn n_users_mut(&mut self) -> &mut usize {
        match (&mut self.bot, &mut self.advertising) {
            (Some(b), _) => &mut b.n_users,
            (_, Some(a)) => &mut a.n_users,
            _ => panic!("config has no environment section"),
        }
    }

    pub fn horizon_mut(&mut self) -> &mut usize {
        match (&mut self.bot, &mut self.advertising) {
            (Some(b), _) => &mut b.horizon,
            (_, Some(a)) => &mut a.horizon,
            _ => panic!("config has no environment section"),
        }
    }

    pub fn sbcm(&self) -> &SbcmParams {
        match (&self.bot, &self.advertising) {
            (Some(b), _) => &b.sbcm,
            (_, Some(a)) => &a.sbcm,
            _ => panic!("config has no environment section"),
        }
    }

    pub fn n_users(&self) -> usize {
        self.bot.as_ref().map_or_else(
            || self.advertising.as_ref().map_or(0, |a| a.n_users),
            |b| b.n_users,
        )
    }

    pub fn horizon(&self) -> usize {
        self.bot.as_ref().map_or_else(
            || self.advertising.as_ref().map_or(0, |a| a.horizon),
            |b| b.horizon,
        )
    }

    pub fn build_env(&self) -> Result<Box<dyn Environment + Send>> {
        self.validate()?;
        match self.scenario {
            Scenario::Bot => Ok(Box::new(BotEnv::new(self.bot.clone().expect("validated"))?)),
            Scenario::Advertising => Ok(Box::new(AdvertisingEnv::new(
                self.advertising.clone().expect("validated"),
            )?)),
        }
    }
}
