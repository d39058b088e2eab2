//! Multi-intention inverse reinforcement learning on tabular MDPs.
//!
//! The crate is organised bottom-up:
//!
//! - [`mdp`]: transition models, exact dynamic programming, rollouts and
//!   visitation frequencies.
//! - [`radar`]: a radar/jammer spectrum-sharing scenario that produces the
//!   MDP, the per-task rewards and the `(s, a, s')` feature encoding.
//! - [`reward`]: linear and feed-forward reward models with hand-written
//!   backpropagation and an Adam optimizer.
//! - [`irl`]: maximum-entropy and maximum-likelihood IRL trainers and the EM
//!   mixture over several reward models.
//! - [`metrics`] and [`baselines`]: clustering/reward-recovery metrics and
//!   the K-means / Gaussian-mixture comparison points.
//! - [`dataset`]: the JSON Lines trajectory format.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod irl;
pub mod mdp;
pub mod metrics;
pub mod radar;
pub mod reward;

pub use error::{Error, Result};
