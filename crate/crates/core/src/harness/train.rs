use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use super::checkpoint::save_agent;
use super::config::RunConfig;
use crate::ddpg::{run_episode, DdpgAgent, Mode};
use crate::error::{Error, Result};
use crate::rng::{RngStream, Stream};

/// One row of `train_log.csv`: `episode,return,final_mean,final_std,wall_ms`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    /// 1-based episode number.
    pub episode: usize,
    pub episode_return: f64,
    pub final_mean: f64,
    pub final_std: f64,
    pub wall_ms: u64,
}

pub struct TrainOutcome {
    pub agent: DdpgAgent,
    pub log: Vec<EpisodeLog>,
}

/// Runs `config.episodes` training episodes and writes, under `output_dir`:
/// `config.toml`, `train_log.csv`, `checkpoints/episode_NNNNN/` every
/// `checkpoint_every` episodes and `checkpoints/final/`.
pub fn train(config: &RunConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let out = &config.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let config_path = out.join("config.toml");
    std::fs::write(&config_path, config.to_toml()).map_err(|e| Error::io(&config_path, e))?;

    let mut env = config.build_env()?;
    let mut agent = DdpgAgent::new(
        env.observation_dim(),
        env.action_dim(),
        config.ddpg.clone(),
        &mut RngStream::derived(config.seed, Stream::AgentInit, 0),
        RngStream::derived(config.seed, Stream::Learner, 0),
    )?;
    let log_path = out.join("train_log.csv");
    let mut log = Vec::with_capacity(config.episodes);
    for ep in 0..config.episodes {
        agent.noise.sigma = config.ddpg.noise.sigma_at(ep, config.episodes);
        let start = Instant::now();
        let rng = RngStream::derived(config.seed, Stream::TrainEpisode, ep as u64);
        let trace = run_episode(&mut agent, env.as_mut(), rng, Mode::Train)?;
        log.push(EpisodeLog {
            episode: ep + 1,
            episode_return: trace.episode_return(),
            final_mean: trace.final_mean(),
            final_std: trace.final_std(),
            wall_ms: if config.record_wall_clock {
                start.elapsed().as_millis() as u64
            } else {
                0
            },
        });
        let done = ep + 1;
        if config.checkpoint_every > 0
            && done % config.checkpoint_every == 0
            && done < config.episodes
        {
            save_agent(
                &agent,
                config,
                done,
                &out.join("checkpoints").join(format!("episode_{done:05}")),
            )?;
            write_log_file(&log, &log_path)?;
        }
    }
    save_agent(
        &agent,
        config,
        config.episodes,
        &out.join("checkpoints").join("final"),
    )?;
    write_log_file(&log, &log_path)?;
    Ok(TrainOutcome { agent, log })
}

fn write_log_file(log: &[EpisodeLog], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_train_log(log, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn write_train_log<W: Write>(log: &[EpisodeLog], mut w: W) -> std::io::Result<()> {
    writeln!(w, "episode,return,final_mean,final_std,wall_ms")?;
    for row in log {
        writeln!(
            w,
            "{},{},{},{},{}",
            row.episode, row.episode_return, row.final_mean, row.final_std, row.wall_ms
        )?;
    }
    w.flush()
}

pub fn read_train_log<R: Read>(mut r: R) -> Result<Vec<EpisodeLog>> {
    let mut text = String::new();
    r.read_to_string(&mut text).map_err(|e| Error::TraceParse {
        line: 0,
        message: e.to_string(),
    })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "episode,return,final_mean,final_std,wall_ms")) => {}
        _ => {
            return Err(Error::TraceParse {
                line: 1,
                message: "bad training log header".into(),
            })
        }
    }
    lines
        .map(|(i, line)| {
            let err = |m: &str| Error::TraceParse {
                line: i + 1,
                message: m.into(),
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(err("expected 5 fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| err("invalid number"));
            Ok(EpisodeLog {
                episode: f[0].parse().map_err(|_| err("invalid episode"))?,
                episode_return: num(f[1])?,
                final_mean: num(f[2])?,
                final_std: num(f[3])?,
                wall_ms: f[4].parse().map_err(|_| err("invalid wall_ms"))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_round_trip() {
        let log = vec![
            EpisodeLog {
                episode: 1,
                episode_return: 0.125,
                final_mean: -0.3,
                final_std: 0.01,
                wall_ms: 12,
            },
            EpisodeLog {
                episode: 2,
                episode_return: 1e-17,
                final_mean: 0.999,
                final_std: 0.0,
                wall_ms: 0,
            },
        ];
        let mut buf = Vec::new();
        write_train_log(&log, &mut buf).unwrap();
        assert_eq!(read_train_log(&buf[..]).unwrap(), log);
        assert!(read_train_log("episode,return\n".as_bytes()).is_err());
        let bad = "episode,return,final_mean,final_std,wall_ms\n1,x,0,0,0\n";
        assert!(matches!(
            read_train_log(bad.as_bytes()),
            Err(Error::TraceParse { line: 2, .. })
        ));
    }
}
