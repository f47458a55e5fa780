//! Differentially private data gathering with bandit algorithms.
//!
//! Adaptive data collection (UCB and friends) biases the empirical means it
//! records. When the arm-selection transcript is differentially private in
//! the observed rewards, that bias is bounded by roughly `e^ε - 1`, and any
//! statistic later chosen from the gathered data admits a max-information
//! p-value correction.
//!
//! The crate is organised as:
//!
//! * [`model`] and [`interact`]: reward models, pre-drawn bandit tableaux,
//!   the online and tableau interaction drivers, and pseudo-regret.
//! * [`privacy`]: Laplace sampling, tree-based continual prefix-sum release
//!   (scalar and vector) and privacy-budget bookkeeping.
//! * [`stochastic`]: UCB1 and private UCB.
//! * [`linear`]: OFUL and reward-private linear UCB, plus the prediction-bias
//!   estimator for linear contextual bandits.
//! * [`stats`]: bias reports, z-tests, max-information bounds and p-value
//!   correction.
//! * [`harness`]: seeded Monte Carlo experiments and their CSV/JSON outputs.

pub mod error;
pub mod harness;
pub mod interact;
pub mod linear;
pub mod model;
pub mod policy;
pub mod privacy;
pub mod selftest;
pub mod stats;
pub mod stochastic;

pub use error::{Error, Result};
pub use interact::{interact_online, interact_tableau, ActionHistory, RunRecord};
pub use model::{generate_tableau, BanditTableau, ContextGenerator, RewardModel};
pub use policy::Policy;
