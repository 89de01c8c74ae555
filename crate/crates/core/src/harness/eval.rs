use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checkpoint::load_agent;
use super::config::{RunConfig, Scenario};
use crate::ddpg::{run_policy_episode, DdpgAgent};
use crate::env::{reward_bot, Environment, StepDetail, StepResult};
use crate::error::{Error, Result};
use crate::rng::{RngStream, Stream};
use crate::sbcm::{mean_std, step_opinions, OpinionState, SbcmParams};
use crate::trace::{emit_trace, EpisodeTrace};

/// Statistics of final user opinions over a set of episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionSummary {
    pub episodes: usize,
    /// Per-episode final mean, averaged over episodes.
    pub mean_of_final_means: f64,
    /// Population std of the per-episode final means.
    pub across_episode_std: f64,
    /// Per-episode final population std, averaged over episodes.
    pub within_episode_std: f64,
    /// Population std of all final opinions of all episodes together.
    pub pooled_std: f64,
    pub mean_return: f64,
    /// Advertising spend per episode; zero for the bot scenario.
    pub mean_total_cost: f64,
    /// Episodes ending with a negative budget.
    pub overspent_episodes: usize,
}

impl OpinionSummary {
    /// Aggregates complete traces. Every episode must have the same population
    /// size, which makes the pooled std a function of per-episode mean and std.
    pub fn from_traces(traces: &[EpisodeTrace]) -> Self {
        let means: Vec<f64> = traces.iter().map(EpisodeTrace::final_mean).collect();
        let stds: Vec<f64> = traces.iter().map(EpisodeTrace::final_std).collect();
        let (grand, across) = mean_std(&means);
        let n = traces.len() as f64;
        let pooled_var = means
            .iter()
            .zip(&stds)
            .map(|(m, s)| s * s + (m - grand) * (m - grand))
            .sum::<f64>()
            / n;
        let overspent = traces
            .iter()
            .filter(|t| {
                matches!(t.records.last().map(|r| &r.detail), Some(StepDetail::Advertising { budget, .. }) if *budget < 0.0)
            })
            .count();
        Self {
            episodes: traces.len(),
            mean_of_final_means: grand,
            across_episode_std: across,
            within_episode_std: stds.iter().sum::<f64>() / n,
            pooled_std: pooled_var.sqrt(),
            mean_return: traces.iter().map(EpisodeTrace::episode_return).sum::<f64>() / n,
            mean_total_cost: traces.iter().map(EpisodeTrace::total_cost).sum::<f64>() / n,
            overspent_episodes: overspent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    Policy,
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub kind: ReportKind,
    pub scenario: Scenario,
    pub eval_episodes: usize,
    /// Noise-free policy episodes, or the null intervention for a baseline report.
    pub summary: OpinionSummary,
    /// Null intervention on the same episode seeds; absent in baseline reports.
    pub baseline: Option<OpinionSummary>,
    pub wall_ms: u64,
    pub config: RunConfig,
}

impl EvalReport {
    /// Writes `<name>.json` and the first `config.eval_traces` traces as
    /// `traces/<name>_NNNN.csv` into `dir`.
    pub fn write(&self, traces: &[EpisodeTrace], dir: &Path, name: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(format!("{name}.json"));
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        let count = self.config.eval_traces.min(traces.len());
        if count > 0 {
            let trace_dir = dir.join("traces");
            std::fs::create_dir_all(&trace_dir).map_err(|e| Error::io(&trace_dir, e))?;
            for (i, t) in traces.iter().take(count).enumerate() {
                emit_trace(t, trace_dir.join(format!("{name}_{i:04}.csv")))?;
            }
        }
        Ok(())
    }
}

/// SBCM without any intervention: users only, action ignored.
struct PlainSbcm {
    n_users: usize,
    horizon: usize,
    params: SbcmParams,
    state: OpinionState,
    t: usize,
    rng: RngStream,
}

impl Environment for PlainSbcm {
    fn observation_dim(&self) -> usize {
        self.n_users + 1
    }

    fn action_dim(&self) -> usize {
        0
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn reset(&mut self, mut rng: RngStream) -> Vec<f64> {
        // same draws as the scenario environments, so episodes pair up by seed
        let users = (0..self.n_users)
            .map(|_| rng.uniform_open(-1.0, 1.0))
            .collect();
        self.state = OpinionState::new(users, Vec::new());
        self.t = 0;
        self.rng = rng;
        Vec::new()
    }

    fn step(&mut self, _action: &[f64]) -> Result<StepResult> {
        if self.t >= self.horizon {
            return Err(Error::EpisodeDone);
        }
        let (prev, _) = mean_std(&self.state.users);
        self.state = step_opinions(&self.state, &self.params, &mut self.rng)?;
        self.t += 1;
        let (mean, std) = mean_std(&self.state.users);
        Ok(StepResult {
            observation: Vec::new(),
            reward: reward_bot(prev, mean, self.t, self.horizon),
            done: self.t == self.horizon,
            t: self.t,
            mean,
            std,
            detail: StepDetail::Bot {
                bots: Vec::new(),
                users: self.state.users.clone(),
            },
        })
    }

    fn users(&self) -> &[f64] {
        &self.state.users
    }
}

fn eval_rng(config: &RunConfig, episode: usize) -> RngStream {
    RngStream::derived(config.seed, Stream::EvalEpisode, episode as u64)
}

/// Runs the null intervention over the evaluation seeds: bots absent from
/// the candidate pool, or zero-cost zero-range ads.
fn null_traces(config: &RunConfig) -> Result<Vec<EpisodeTrace>> {
    config.validate()?;
    (0..config.eval_episodes)
        .into_par_iter()
        .map(|i| match config.scenario {
            Scenario::Bot => {
                let mut env = PlainSbcm {
                    n_users: config.n_users(),
                    horizon: config.horizon(),
                    params: *config.sbcm(),
                    state: OpinionState::new(Vec::new(), Vec::new()),
                    t: 0,
                    rng: RngStream::new(0),
                };
                run_policy_episode(&mut env, eval_rng(config, i), |_| Ok(Vec::new()))
            }
            Scenario::Advertising => {
                let mut env = config.build_env()?;
                // raw range -1 maps to range 0
                run_policy_episode(env.as_mut(), eval_rng(config, i), |_| Ok(vec![0.0, -1.0]))
            }
        })
        .collect()
}

fn policy_traces(agent: &DdpgAgent, config: &RunConfig) -> Result<Vec<EpisodeTrace>> {
    let env = config.build_env()?;
    if env.observation_dim() != agent.obs_dim() || env.action_dim() != agent.action_dim() {
        return Err(Error::ArchitectureMismatch(format!(
            "agent expects {} inputs and {} actions, environment has {} and {}",
            agent.obs_dim(),
            agent.action_dim(),
            env.observation_dim(),
            env.action_dim()
        )));
    }
    (0..config.eval_episodes)
        .into_par_iter()
        .map(|i| {
            let mut env = config.build_env()?;
            run_policy_episode(env.as_mut(), eval_rng(config, i), |obs| agent.act(obs))
        })
        .collect()
}

fn elapsed_ms(config: &RunConfig, start: Instant) -> u64 {
    if config.record_wall_clock {
        start.elapsed().as_millis() as u64
    } else {
        0
    }
}

/// Noise-free evaluation of `agent` plus the paired null-intervention baseline.
pub fn evaluate_agent(
    agent: &DdpgAgent,
    config: &RunConfig,
) -> Result<(EvalReport, Vec<EpisodeTrace>)> {
    let start = Instant::now();
    let traces = policy_traces(agent, config)?;
    let baseline = OpinionSummary::from_traces(&null_traces(config)?);
    let report = EvalReport {
        kind: ReportKind::Policy,
        scenario: config.scenario,
        eval_episodes: config.eval_episodes,
        summary: OpinionSummary::from_traces(&traces),
        baseline: Some(baseline),
        wall_ms: elapsed_ms(config, start),
        config: config.clone(),
    };
    Ok((report, traces))
}

/// Evaluates the checkpoint in `checkpoint`, under `config` when given and
/// otherwise under the config recorded in the checkpoint.
pub fn evaluate(
    checkpoint: &Path,
    config: Option<&RunConfig>,
) -> Result<(EvalReport, Vec<EpisodeTrace>)> {
    let (agent, meta) = load_agent(checkpoint)?;
    let config = config.cloned().unwrap_or(meta.config);
    evaluate_agent(&agent, &config)
}

/// Final-opinion statistics with no intervention at all.
pub fn baseline(config: &RunConfig) -> Result<(EvalReport, Vec<EpisodeTrace>)> {
    let start = Instant::now();
    let traces = null_traces(config)?;
    let report = EvalReport {
        kind: ReportKind::Baseline,
        scenario: config.scenario,
        eval_episodes: config.eval_episodes,
        summary: OpinionSummary::from_traces(&traces),
        baseline: None,
        wall_ms: elapsed_ms(config, start),
        config: config.clone(),
    };
    Ok((report, traces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::StepRecord;

    fn final_only(mean: f64, std: f64, reward: f64) -> EpisodeTrace {
        EpisodeTrace {
            records: vec![StepRecord {
                t: 1,
                mean,
                std,
                reward,
                detail: StepDetail::Bot {
                    bots: vec![],
                    users: vec![],
                },
            }],
        }
    }

    #[test]
    fn summary_pools_by_law_of_total_variance() {
        // two episodes of users {0, 1} and {1, 1}: pooled {0, 1, 1, 1}
        let traces = [final_only(0.5, 0.5, 1.0), final_only(1.0, 0.0, 3.0)];
        let s = OpinionSummary::from_traces(&traces);
        assert_eq!(s.mean_of_final_means, 0.75);
        assert_eq!(s.across_episode_std, 0.25);
        assert_eq!(s.within_episode_std, 0.25);
        let pooled = [0.0f64, 1.0, 1.0, 1.0];
        let (_, direct) = mean_std(&pooled);
        assert!((s.pooled_std - direct).abs() < 1e-15);
        assert_eq!(s.mean_return, 2.0);
        assert_eq!(s.overspent_episodes, 0);
    }

    #[test]
    fn bot_baseline_has_no_bots() {
        let mut config = RunConfig::desk(Scenario::Bot);
        config.eval_episodes = 3;
        config.bot.as_mut().unwrap().horizon = 5;
        let (report, traces) = baseline(&config).unwrap();
        assert_eq!(report.kind, ReportKind::Baseline);
        assert_eq!(traces.len(), 3);
        for t in &traces {
            assert_eq!(t.records.len(), 5);
            let StepDetail::Bot { bots, users } = &t.records[0].detail else {
                panic!()
            };
            assert!(bots.is_empty());
            assert_eq!(users.len(), 50);
        }
    }

    #[test]
    fn advertising_baseline_spends_nothing() {
        let mut config = RunConfig::desk(Scenario::Advertising);
        config.eval_episodes = 2;
        config.advertising.as_mut().unwrap().horizon = 4;
        let (report, _) = baseline(&config).unwrap();
        assert_eq!(report.summary.mean_total_cost, 0.0);
        assert_eq!(report.summary.overspent_episodes, 0);
    }

    #[test]
    fn baseline_pairs_initial_states_with_policy_episodes() {
        // the first step of the bot environment and the plain SBCM start from
        // the same initial users for equal seeds
        let mut config = RunConfig::desk(Scenario::Bot);
        config.eval_episodes = 1;
        let mut env = config.build_env().unwrap();
        env.reset(eval_rng(&config, 0));
        let scenario_users = env.users().to_vec();
        let mut plain = PlainSbcm {
            n_users: 50,
            horizon: 100,
            params: *config.sbcm(),
            state: OpinionState::new(vec![], vec![]),
            t: 0,
            rng: RngStream::new(0),
        };
        plain.reset(eval_rng(&config, 0));
        assert_eq!(plain.users(), &scenario_users[..]);
    }
}
