//! The LONR drivers.
//!
//! Every state owns a no-regret learner that is fed Q-style backups. The
//! synchronous driver backs up all states from one snapshot per iteration,
//! the asynchronous one a single selected state, and the bandit one a single
//! sampled action with an importance-weighted update.

mod agent;
mod run;
mod selfplay;
mod table;

use serde::{Deserialize, Serialize};

use crate::analysis::{BoundSummary, TraceRecord, XiTrace};
use crate::error::{LonrError, Result};
use crate::minimizers::{ActionDistribution, MinimizerKind, MinimizerParams, MinimizerSnapshot};

pub use agent::{LocalLearners, Selector};
pub use run::{run, run_lonr_v};
pub use selfplay::{evaluate_policies, run_selfplay, Evaluation, EPISODE_STEP_CAP};
pub use table::QTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "LONR_V", alias = "V")]
    LonrV,
    #[serde(rename = "LONR_A", alias = "A")]
    LonrA,
    #[serde(rename = "LONR_B", alias = "B")]
    LonrB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StateSelection {
    Uniform,
    OnPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct TraceOptions {
    /// Record every `every`-th iteration (1-based); 0 disables the trace.
    pub every: u64,
    /// Also record each of the final `tail` iterations.
    pub tail: u64,
    /// Record the per-iteration expected values behind the xi diagnostic.
    pub xi: bool,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub minimizer: MinimizerKind,
    pub params: MinimizerParams,
    pub iterations: u64,
    pub seed: u64,
    pub selection: StateSelection,
    /// Uniform exploration mixed into the on-policy trajectory.
    pub explore_epsilon: f64,
    pub initial_q: f64,
    /// Round-0 policies as `[player][state][action]`; a player without an
    /// entry starts uniform everywhere.
    pub initial_policy: Vec<Vec<Vec<f64>>>,
    pub trace: TraceOptions,
    /// Bandit variant: bootstrap from the successor's last played action and
    /// update only the played entry.
    pub sarsa_bandit: bool,
    /// Evaluate the range and average-residual bounds at every iteration.
    pub check_bounds: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::LonrV,
            minimizer: MinimizerKind::RmPlusPlus,
            params: MinimizerParams::default(),
            iterations: 1000,
            seed: 0,
            selection: StateSelection::Uniform,
            explore_epsilon: 0.1,
            initial_q: 0.0,
            initial_policy: Vec::new(),
            trace: TraceOptions::default(),
            sarsa_bandit: false,
            check_bounds: false,
        }
    }
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, minimizer: MinimizerKind, iterations: u64) -> Self {
        Self {
            algorithm,
            minimizer,
            iterations,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_params(mut self, params: MinimizerParams) -> Self {
        self.params = params;
        self
    }

    pub fn with_selection(mut self, selection: StateSelection) -> Self {
        self.selection = selection;
        self
    }

    pub fn with_initial_policy(mut self, policy: Vec<Vec<Vec<f64>>>) -> Self {
        self.initial_policy = policy;
        self
    }

    /// Round-0 policy of `player`, empty when it starts uniform.
    pub(crate) fn initial_policy_of(&self, player: usize) -> &[Vec<f64>] {
        self.initial_policy.get(player).map_or(&[], Vec::as_slice)
    }

    pub fn with_trace_every(mut self, every: u64) -> Self {
        self.trace.every = every;
        self
    }

    /// Records each of the last `window` iterations.
    pub fn with_trace_tail(mut self, window: u64) -> Self {
        self.trace.tail = window;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(LonrError::InvalidParameter(
                "iterations must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.explore_epsilon) {
            return Err(LonrError::InvalidParameter(format!(
                "explore_epsilon must lie in [0, 1], got {}",
                self.explore_epsilon
            )));
        }
        if !self.initial_q.is_finite() {
            return Err(LonrError::NonFinite(format!(
                "initial_q {}",
                self.initial_q
            )));
        }
        if self.algorithm == Algorithm::LonrB && !self.minimizer.is_bandit() {
            return Err(LonrError::InvalidParameter(format!(
                "bandit feedback needs a bandit learner, got {}",
                self.minimizer
            )));
        }
        self.params.validate(self.minimizer)
    }
}

/// Outcome of one run for one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub player: usize,
    pub q: QTable,
    pub current_policy: Vec<ActionDistribution>,
    pub average_policy: Vec<ActionDistribution>,
    /// Per-state average empirical regret.
    pub regret: Vec<f64>,
    pub learners: Vec<MinimizerSnapshot>,
    pub trace: Vec<TraceRecord>,
    pub xi: Option<XiTrace>,
    pub bounds: Vec<BoundSummary>,
}

impl RunResult {
    /// Current-policy trace of one state, one entry per recorded iteration.
    pub fn policy_trace(&self, state: usize) -> Vec<Vec<f64>> {
        self.trace.iter().map(|r| r.policy[state].clone()).collect()
    }

    /// Average-policy trace of one state, one entry per recorded iteration.
    pub fn average_policy_trace(&self, state: usize) -> Vec<Vec<f64>> {
        self.trace
            .iter()
            .map(|r| r.avg_policy[state].clone())
            .collect()
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of the learner at (`player`, `state`) for a run seeded with `seed`.
pub(crate) fn learner_seed(seed: u64, params_seed: u64, player: usize, state: usize) -> u64 {
    splitmix64(seed ^ splitmix64(params_seed) ^ splitmix64(((player as u64) << 32) | state as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_and_validates() {
        let config = RunConfig::new(Algorithm::LonrA, MinimizerKind::Omwu, 10)
            .with_selection(StateSelection::OnPolicy);
        let json = serde_json::to_string(&config).unwrap();
        assert!(json.contains("\"LONR_A\"") && json.contains("\"ON_POLICY\""));
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), config);

        let mut bad = config.clone();
        bad.iterations = 0;
        assert!(bad.validate().is_err());
        let mut bad = config.clone();
        bad.explore_epsilon = 1.5;
        assert!(bad.validate().is_err());
        assert!(RunConfig::new(Algorithm::LonrB, MinimizerKind::Rm, 10)
            .validate()
            .is_err());
        assert!(RunConfig::new(Algorithm::LonrB, MinimizerKind::Exp3, 10)
            .validate()
            .is_ok());
    }

    #[test]
    fn learner_seeds_differ_across_slots() {
        let a = learner_seed(1, 0, 0, 0);
        assert_ne!(a, learner_seed(1, 0, 0, 1));
        assert_ne!(a, learner_seed(1, 0, 1, 0));
        assert_ne!(a, learner_seed(2, 0, 0, 0));
        assert_eq!(a, learner_seed(1, 0, 0, 0));
    }
}
