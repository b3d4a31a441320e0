//! Local no-regret learning for tabular MDPs and Markov games.
//!
//! A no-regret learner sits at every state and is fed Q-style backups. The
//! crate provides the environments, the learners, the synchronous,
//! asynchronous and bandit drivers, and the oracles used to check them.

pub mod analysis;
pub mod env_model;
pub mod error;
pub mod lonr;
pub mod minimizers;

pub use env_model::{induced_mdp, MarkovGameSpec, MdpSpec};
pub use error::{LonrError, Result};
pub use lonr::{
    run, run_lonr_v, run_selfplay, Algorithm, QTable, RunConfig, RunResult, StateSelection,
};
pub use minimizers::{ActionDistribution, Minimizer, MinimizerKind, MinimizerParams};
