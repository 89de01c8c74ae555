//! Opinion shaping in a stochastic bounded confidence model.
//!
//! Two control problems over a fully mixed population: an agent that sets the
//! opinions of injected bots, and an advertiser that picks an opinion and an
//! audience width under a budget. Both are learned with DDPG.

pub mod ddpg;
pub mod env;
mod error;
pub mod harness;
pub mod nn;
pub mod rng;
pub mod sbcm;
pub mod trace;

pub use error::{Error, Result};
