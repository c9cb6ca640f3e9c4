//! Distributed channel allocation in the frequency-selective interference
//! channel, viewed as a non-cooperative game.
//!
//! - [`channel`]: Rayleigh-fading realizations, channel rankings, powers.
//! - [`game`]: interference, the naive and M-best utilities, weighted sum-rate.
//! - [`equilibrium`]: best responses, equilibrium checks and enumeration, PPoA.
//! - [`assignment`]: Hungarian benchmark, bipartite matchings, permanents.
//! - [`dynamics`]: modified fictitious play and a joint-strategy reference.
//! - [`experiment`]: seeded Monte Carlo sweeps and CSV/JSONL output.
//!
//! Every numeric type is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases below fix the scalar to `f64`, which the experiment harness uses.

pub mod assignment;
pub mod channel;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod experiment;
pub mod game;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use game::{Allocation, GameKind};
pub use scalar::Scalar;

pub type ChannelRealization = channel::ChannelRealization<f64>;
pub type OrderedChannels = channel::OrderedChannels<f64>;
pub type PowerProfile = channel::PowerProfile<f64>;
pub type GameConfig<'a> = game::GameConfig<'a, f64>;
pub type DynamicsConfig = dynamics::DynamicsConfig<f64>;
pub type FpState = dynamics::FpState<f64>;
pub type Trajectory = dynamics::Trajectory<f64>;
pub type PneReport = equilibrium::PneReport<f64>;
pub type PpoaResult = equilibrium::PpoaResult<f64>;
pub type AssignmentResult = assignment::AssignmentResult<f64>;
