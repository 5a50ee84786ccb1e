//! Averaged boost-converter simulation with PI, supervised-network and
//! PPO voltage controllers, plus the tooling to tune, train and compare them.

pub mod ann;
pub mod converter;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod nn;
pub mod pi;
pub mod ppo;
pub mod tuning;
pub mod verify;

pub use error::{Error, Result};
