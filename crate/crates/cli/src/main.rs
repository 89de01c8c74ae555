use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use opinion_shaping::harness::{self, RunConfig, Scenario};

#[derive(Parser)]
#[command(
    name = "sbcm-shape",
    version,
    about = "Opinion shaping with bots and budgeted advertising"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write log, checkpoints and an evaluation report.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Skip the evaluation that follows training.
        #[arg(long)]
        no_eval: bool,
    },
    /// Evaluate a checkpoint directory without exploration noise.
    Eval {
        /// Checkpoint directory, e.g. runs/bot/checkpoints/final.
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Final-opinion statistics with no intervention.
    Baseline {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Desk,
    Full,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<Scenario>,
    /// Size preset used when no config file is given.
    #[arg(long, value_enum, default_value = "desk")]
    preset: Preset,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "out")]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    n_users: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    eval_episodes: Option<usize>,
    #[arg(long)]
    n_bots: Option<usize>,
    /// Initial advertising budget.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    /// Number of evaluation traces written as CSV.
    #[arg(long)]
    traces: Option<usize>,
    /// Write zero wall-clock times so repeated runs are byte-identical.
    #[arg(long)]
    no_wall_clock: bool,
}

fn parse_scenario(s: &str) -> std::result::Result<Scenario, String> {
    s.parse().map_err(|e: opinion_shaping::Error| e.to_string())
}

impl ConfigArgs {
    /// `base` is used when neither a file nor a scenario is given (eval reuses the checkpoint's config).
    fn resolve(&self, base: Option<RunConfig>) -> Result<RunConfig> {
        let mut config = match (&self.config, self.scenario, base) {
            (Some(path), _, _) => {
                RunConfig::load(path).with_context(|| format!("loading {}", path.display()))?
            }
            (None, Some(s), _) => match self.preset {
                Preset::Desk => RunConfig::desk(s),
                Preset::Full => RunConfig::full(s),
            },
            (None, None, Some(base)) => base,
            (None, None, None) => bail!("give --config or --scenario"),
        };
        if let Some(s) = self.scenario {
            if s != config.scenario {
                bail!(
                    "--scenario {s:?} conflicts with the config's {:?}",
                    config.scenario
                );
            }
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = &self.output_dir {
            config.output_dir = v.clone();
        }
        if let Some(v) = self.n_users {
            *config.n_users_mut() = v;
        }
        if let Some(v) = self.horizon {
            *config.horizon_mut() = v;
        }
        if let Some(v) = self.episodes {
            config.episodes = v;
        }
        if let Some(v) = self.eval_episodes {
            config.eval_episodes = v;
        }
        if let Some(v) = self.n_bots {
            match config.bot.as_mut() {
                Some(bot) => bot.n_bots = v,
                None => bail!("--n-bots applies to the bot scenario only"),
            }
        }
        if let Some(v) = self.budget {
            match config.advertising.as_mut() {
                Some(adv) => adv.initial_budget = v,
                None => bail!("--budget applies to the advertising scenario only"),
            }
        }
        if let Some(v) = self.mu {
            config.sbcm_mut().mu = v;
        }
        if let Some(v) = self.epsilon {
            config.sbcm_mut().epsilon = v;
        }
        if let Some(v) = self.traces {
            config.eval_traces = v;
        }
        if self.no_wall_clock {
            config.record_wall_clock = false;
        }
        config.validate()?;
        Ok(config)
    }
}

fn print_summary(report: &harness::EvalReport) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(&report.summary)?);
    if let Some(b) = &report.baseline {
        println!(
            "baseline mean {:.4}, shift over baseline {:+.4}",
            b.mean_of_final_means,
            report.summary.mean_of_final_means - b.mean_of_final_means
        );
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train { config, no_eval } => {
            let config = config.resolve(None)?;
            let outcome = harness::train(&config)?;
            let last = outcome.log.last().expect("at least one episode");
            eprintln!(
                "trained {} episodes; last return {:.4}, final mean {:.4}",
                last.episode, last.episode_return, last.final_mean
            );
            if !no_eval {
                let (report, traces) = harness::evaluate_agent(&outcome.agent, &config)?;
                report.write(&traces, &config.output_dir, "eval_report")?;
                print_summary(&report)?;
            }
        }
        Command::Eval { checkpoint, config } => {
            let (_, meta) = harness::load_agent(&checkpoint)
                .with_context(|| format!("loading checkpoint {}", checkpoint.display()))?;
            let mut base = meta.config;
            base.output_dir = checkpoint.clone();
            let config = config.resolve(Some(base))?;
            let (report, traces) = harness::evaluate(&checkpoint, Some(&config))?;
            report.write(&traces, &config.output_dir, "eval_report")?;
            print_summary(&report)?;
        }
        Command::Baseline { config } => {
            let config = config.resolve(None)?;
            let (report, traces) = harness::baseline(&config)?;
            report.write(&traces, &config.output_dir, "baseline_report")?;
            print_summary(&report)?;
        }
    }
    Ok(())
}
