//! Deep deterministic policy gradient learner.

mod agent;
mod noise;
mod replay;
mod rollout;

pub use agent::{DdpgAgent, DdpgConfig, TrainStats};
pub use noise::{OuConfig, OuNoise};
pub use replay::{ReplayBuffer, Transition};
pub use rollout::{run_episode, run_policy_episode, Mode};
