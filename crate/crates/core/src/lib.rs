//! Best-of-sampled-set (BOSS) model-based reinforcement learning on tabular MDPs.
//!
//! The crate covers exact planning ([`mdp`]), the Chain benchmark environments
//! ([`env`]), conjugate and clustering posteriors over dynamics ([`posterior`]),
//! the BOSS agent and its baselines ([`agent`]), and a seeded experiment harness
//! ([`harness`]).
//!
//! Planning types are generic over the floating-point [`Scalar`]; the aliases below
//! fix them to `f64`, which is what the harness uses.

pub mod agent;
pub mod env;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod posterior;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Mdp = mdp::TabularMdp<f64>;
pub type Mdp32 = mdp::TabularMdp<f32>;
pub type Values = mdp::ValueFunction<f64>;
pub type Env = env::EnvInstance<f64>;
pub type MergedMdp = agent::MergedMdp<f64>;
pub type Boss = agent::BossAgent<f64>;
