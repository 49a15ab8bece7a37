//! Multi-IRS downlink simulator and per-BS multi-agent DDPG engine for joint
//! transmit beamforming, IRS phase shifts and BS-IRS association.

pub mod agent;
pub mod baselines;
pub mod channel;
pub mod complex;
pub mod config;
pub mod env;
pub mod error;
pub mod experiment;
pub mod nn;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic random stream `stream` derived from `seed`.
///
/// Distinct streams of the same seed are statistically independent, which keeps
/// e.g. the channel trajectory unaffected by how many exploration draws an agent makes.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
