//! Energy-harvesting multi-user uplink: simulator, LSTM-DQN access control,
//! LSTM battery prediction, the joint two-layer controller, baseline
//! schedulers, offline bounds and an experiment harness.

pub mod agents;
pub mod baselines;
pub mod error;
pub mod harness;
pub mod env;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
