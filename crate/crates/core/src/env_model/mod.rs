//! Finite MDPs and Markov games.
//!
//! Both specs are validated on construction and immutable afterwards. The JSON
//! form mirrors the in-memory layout (nested per state, then per action) and is
//! re-validated on load.

mod builders;
mod induced;

use serde::{Deserialize, Serialize};

use crate::error::{LonrError, Result};

pub use builders::{
    make_cliff_grid, make_matrix_game, make_nosde, make_random_game, make_random_mdp, make_soccer,
    CliffGrid, GridAction, SoccerAction, SoccerLayout, SoccerOutcome, KEEP, SEND,
};
pub use induced::induced_mdp;

/// Row sums of every transition kernel must be within this of 1.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Time-varying rewards over a fixed transition kernel.
///
/// Iteration `t` uses `tables[t % tables.len()]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSchedule {
    pub tables: Vec<Vec<Vec<f64>>>,
}

impl RewardSchedule {
    pub fn at(&self, t: u64) -> &[Vec<f64>] {
        &self.tables[(t % self.tables.len() as u64) as usize]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MdpDoc {
    /// `transition[s][a][s']`
    transition: Vec<Vec<Vec<f64>>>,
    /// `reward[s][a]`
    reward: Vec<Vec<f64>>,
    discount: f64,
    terminal: Vec<bool>,
    #[serde(default)]
    start_states: Vec<usize>,
    #[serde(default)]
    reward_schedule: Option<RewardSchedule>,
}

/// A finite MDP `(S, A, P, r, gamma)` with terminal flags and an optional reward schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpDoc", into = "MdpDoc")]
pub struct MdpSpec {
    transition: Vec<Vec<Vec<f64>>>,
    reward: Vec<Vec<f64>>,
    discount: f64,
    terminal: Vec<bool>,
    start_states: Vec<usize>,
    reward_schedule: Option<RewardSchedule>,
}

impl MdpSpec {
    /// Validates and builds an MDP. `start_states` defaults to state 0 when empty.
    pub fn new(
        transition: Vec<Vec<Vec<f64>>>,
        reward: Vec<Vec<f64>>,
        discount: f64,
        terminal: Vec<bool>,
    ) -> Result<Self> {
        let spec = Self {
            transition,
            reward,
            discount,
            terminal,
            start_states: vec![0],
            reward_schedule: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Uniform choice among `states` when a trajectory (re)starts.
    pub fn with_start_states(mut self, states: Vec<usize>) -> Result<Self> {
        self.start_states = states;
        self.validate()?;
        Ok(self)
    }

    pub fn with_reward_schedule(mut self, schedule: RewardSchedule) -> Result<Self> {
        self.reward_schedule = Some(schedule);
        self.validate()?;
        Ok(self)
    }

    /// Skips validation; callers guarantee every invariant already holds.
    pub(crate) fn from_parts_unchecked(
        transition: Vec<Vec<Vec<f64>>>,
        reward: Vec<Vec<f64>>,
        discount: f64,
        terminal: Vec<bool>,
        start_states: Vec<usize>,
    ) -> Self {
        Self {
            transition,
            reward,
            discount,
            terminal,
            start_states,
            reward_schedule: None,
        }
    }

    pub fn num_states(&self) -> usize {
        self.transition.len()
    }

    pub fn num_actions(&self, state: usize) -> usize {
        self.transition[state].len()
    }

    pub fn actions_per_state(&self) -> Vec<usize> {
        self.transition.iter().map(Vec::len).collect()
    }

    /// `P(. | s, a)` as a dense row.
    pub fn transition_row(&self, state: usize, action: usize) -> &[f64] {
        &self.transition[state][action]
    }

    pub fn transitions(&self) -> &[Vec<Vec<f64>>] {
        &self.transition
    }

    /// The time-invariant reward table.
    pub fn rewards(&self) -> &[Vec<f64>] {
        &self.reward
    }

    /// Reward table in force at iteration `t`.
    pub fn rewards_at(&self, t: u64) -> &[Vec<f64>] {
        match &self.reward_schedule {
            Some(schedule) => schedule.at(t),
            None => &self.reward,
        }
    }

    pub fn reward_schedule(&self) -> Option<&RewardSchedule> {
        self.reward_schedule.as_ref()
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.terminal[state]
    }

    pub fn terminal_flags(&self) -> &[bool] {
        &self.terminal
    }

    pub fn start_states(&self) -> &[usize] {
        &self.start_states
    }

    /// `max |r(s,a)|` over the base table and every scheduled table.
    pub fn reward_bound(&self) -> f64 {
        let tables = std::iter::once(&self.reward)
            .chain(self.reward_schedule.iter().flat_map(|s| s.tables.iter()));
        tables
            .flat_map(|table| table.iter().flatten())
            .fold(0.0, |acc: f64, r| acc.max(r.abs()))
    }

    /// The MDP whose reward is the mean of the schedule's tables.
    pub fn averaged_reward_mdp(&self) -> MdpSpec {
        let mut averaged = self.clone();
        if let Some(schedule) = &self.reward_schedule {
            let n = schedule.tables.len() as f64;
            for (s, row) in averaged.reward.iter_mut().enumerate() {
                for (a, r) in row.iter_mut().enumerate() {
                    *r = schedule.tables.iter().map(|t| t[s][a]).sum::<f64>() / n;
                }
            }
        }
        averaged.reward_schedule = None;
        averaged
    }

    /// Samples `s' ~ P(. | s, a)`.
    pub fn sample_next<R: rand::Rng + ?Sized>(
        &self,
        state: usize,
        action: usize,
        rng: &mut R,
    ) -> usize {
        sample_index(self.transition_row(state, action), rng)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    fn validate(&self) -> Result<()> {
        let n = self.transition.len();
        if n == 0 {
            return Err(invalid("an MDP needs at least one state"));
        }
        if self.reward.len() != n || self.terminal.len() != n {
            return Err(LonrError::DimensionMismatch(format!(
                "{n} states but {} reward rows and {} terminal flags",
                self.reward.len(),
                self.terminal.len()
            )));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(invalid(&format!(
                "discount {} outside [0, 1]",
                self.discount
            )));
        }
        for s in 0..n {
            let actions = self.transition[s].len();
            if actions == 0 {
                return Err(invalid(&format!("state {s} has no actions")));
            }
            if self.reward[s].len() != actions {
                return Err(LonrError::DimensionMismatch(format!(
                    "state {s}: {actions} actions but {} rewards",
                    self.reward[s].len()
                )));
            }
            for (a, row) in self.transition[s].iter().enumerate() {
                check_row(row, n, &format!("P(.|{s},{a})"))?;
                if self.terminal[s] && row[s] != 1.0 {
                    return Err(invalid(&format!("terminal state {s} must self-loop")));
                }
            }
        }
        check_rewards(&self.reward, &self.terminal, "reward")?;
        if let Some(schedule) = &self.reward_schedule {
            if schedule.tables.is_empty() {
                return Err(LonrError::EmptyInput(
                    "reward schedule has no tables".into(),
                ));
            }
            for (i, table) in schedule.tables.iter().enumerate() {
                let shape_ok = table.len() == n
                    && table
                        .iter()
                        .zip(&self.reward)
                        .all(|(a, b)| a.len() == b.len());
                if !shape_ok {
                    return Err(LonrError::DimensionMismatch(format!(
                        "scheduled reward table {i} has the wrong shape"
                    )));
                }
                check_rewards(table, &self.terminal, &format!("scheduled reward {i}"))?;
            }
        }
        if self.start_states.is_empty() || self.start_states.iter().any(|s| *s >= n) {
            return Err(invalid(
                "start states must be a non-empty list of valid states",
            ));
        }
        if self.discount == 1.0 && !self.reaches_terminal_everywhere() {
            return Err(invalid(
                "discount 1 requires every state to reach a terminal state",
            ));
        }
        Ok(())
    }

    /// Backward reachability from the terminal set over positive-probability edges.
    fn reaches_terminal_everywhere(&self) -> bool {
        let n = self.num_states();
        let mut reaches = self.terminal.clone();
        let mut changed = true;
        while changed {
            changed = false;
            for s in 0..n {
                if reaches[s] {
                    continue;
                }
                let hit = self.transition[s]
                    .iter()
                    .any(|row| row.iter().zip(&reaches).any(|(p, r)| *p > 0.0 && *r));
                if hit {
                    reaches[s] = true;
                    changed = true;
                }
            }
        }
        reaches.iter().all(|r| *r)
    }
}

impl TryFrom<MdpDoc> for MdpSpec {
    type Error = LonrError;

    fn try_from(doc: MdpDoc) -> Result<Self> {
        let spec = Self {
            transition: doc.transition,
            reward: doc.reward,
            discount: doc.discount,
            terminal: doc.terminal,
            start_states: if doc.start_states.is_empty() {
                vec![0]
            } else {
                doc.start_states
            },
            reward_schedule: doc.reward_schedule,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<MdpSpec> for MdpDoc {
    fn from(spec: MdpSpec) -> Self {
        Self {
            transition: spec.transition,
            reward: spec.reward,
            discount: spec.discount,
            terminal: spec.terminal,
            start_states: spec.start_states,
            reward_schedule: spec.reward_schedule,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GameDoc {
    num_players: usize,
    /// `action_sets[s][n]`
    action_sets: Vec<Vec<usize>>,
    /// Per state, the controlling player, or `null` for joint moves.
    controller: Vec<Option<usize>>,
    /// `transition[s][joint][s']`
    transition: Vec<Vec<Vec<f64>>>,
    /// `rewards[s][joint][n]`
    rewards: Vec<Vec<Vec<f64>>>,
    discount: f64,
    terminal: Vec<bool>,
    zero_sum: bool,
    #[serde(default)]
    start_states: Vec<usize>,
}

/// An N-player finite Markov game `(S, N, A, T, R, gamma)`.
///
/// Joint actions are indexed in mixed radix with player 0 as the most
/// significant digit, so a two-player state with action counts `(m, k)`
/// stores joint action `(i, j)` at `i * k + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameDoc", into = "GameDoc")]
pub struct MarkovGameSpec {
    num_players: usize,
    action_sets: Vec<Vec<usize>>,
    controller: Vec<Option<usize>>,
    transition: Vec<Vec<Vec<f64>>>,
    rewards: Vec<Vec<Vec<f64>>>,
    discount: f64,
    terminal: Vec<bool>,
    zero_sum: bool,
    start_states: Vec<usize>,
}

impl MarkovGameSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        num_players: usize,
        action_sets: Vec<Vec<usize>>,
        controller: Vec<Option<usize>>,
        transition: Vec<Vec<Vec<f64>>>,
        rewards: Vec<Vec<Vec<f64>>>,
        discount: f64,
        terminal: Vec<bool>,
        zero_sum: bool,
    ) -> Result<Self> {
        let game = Self {
            num_players,
            action_sets,
            controller,
            transition,
            rewards,
            discount,
            terminal,
            zero_sum,
            start_states: vec![0],
        };
        game.validate()?;
        Ok(game)
    }

    pub fn with_start_states(mut self, states: Vec<usize>) -> Result<Self> {
        self.start_states = states;
        self.validate()?;
        Ok(self)
    }

    pub fn with_discount(mut self, discount: f64) -> Result<Self> {
        self.discount = discount;
        self.validate()?;
        Ok(self)
    }

    pub fn num_states(&self) -> usize {
        self.transition.len()
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn num_actions(&self, state: usize, player: usize) -> usize {
        self.action_sets[state][player]
    }

    /// Actions available to `player` in every state.
    pub fn player_actions(&self, player: usize) -> Vec<usize> {
        self.action_sets.iter().map(|a| a[player]).collect()
    }

    pub fn num_joint_actions(&self, state: usize) -> usize {
        self.transition[state].len()
    }

    pub fn controller(&self, state: usize) -> Option<usize> {
        self.controller[state]
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.terminal[state]
    }

    pub fn terminal_flags(&self) -> &[bool] {
        &self.terminal
    }

    pub fn is_zero_sum(&self) -> bool {
        self.zero_sum
    }

    pub fn start_states(&self) -> &[usize] {
        &self.start_states
    }

    pub fn transition_row(&self, state: usize, joint: usize) -> &[f64] {
        &self.transition[state][joint]
    }

    /// Per-player rewards of a joint action.
    pub fn rewards(&self, state: usize, joint: usize) -> &[f64] {
        &self.rewards[state][joint]
    }

    pub fn joint_index(&self, state: usize, actions: &[usize]) -> usize {
        debug_assert_eq!(actions.len(), self.num_players);
        actions
            .iter()
            .zip(&self.action_sets[state])
            .fold(0, |acc, (a, n)| acc * n + a)
    }

    pub fn decode_joint(&self, state: usize, mut joint: usize) -> Vec<usize> {
        let mut actions = vec![0; self.num_players];
        for (slot, n) in actions.iter_mut().zip(&self.action_sets[state]).rev() {
            *slot = joint % n;
            joint /= n;
        }
        actions
    }

    /// `max |R_n(s, a)|` over all players and entries.
    pub fn reward_bound(&self) -> f64 {
        self.rewards
            .iter()
            .flatten()
            .flatten()
            .fold(0.0, |acc: f64, r| acc.max(r.abs()))
    }

    pub fn sample_next<R: rand::Rng + ?Sized>(
        &self,
        state: usize,
        joint: usize,
        rng: &mut R,
    ) -> usize {
        sample_index(self.transition_row(state, joint), rng)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    fn validate(&self) -> Result<()> {
        let n = self.transition.len();
        if n == 0 || self.num_players == 0 {
            return Err(invalid("a game needs at least one state and one player"));
        }
        let lens = [
            self.action_sets.len(),
            self.controller.len(),
            self.rewards.len(),
            self.terminal.len(),
        ];
        if lens.iter().any(|l| *l != n) {
            return Err(LonrError::DimensionMismatch(format!(
                "{n} states but per-state tables of lengths {lens:?}"
            )));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(invalid(&format!(
                "discount {} outside [0, 1]",
                self.discount
            )));
        }
        for s in 0..n {
            let sets = &self.action_sets[s];
            if sets.len() != self.num_players || sets.contains(&0) {
                return Err(invalid(&format!("state {s}: bad action sets {sets:?}")));
            }
            if let Some(c) = self.controller[s] {
                if c >= self.num_players {
                    return Err(invalid(&format!("state {s}: controller {c} out of range")));
                }
                if sets.iter().enumerate().any(|(p, k)| p != c && *k != 1) {
                    return Err(invalid(&format!(
                        "state {s}: non-controlling players must have exactly one action"
                    )));
                }
            }
            let joint: usize = sets.iter().product();
            if self.transition[s].len() != joint || self.rewards[s].len() != joint {
                return Err(LonrError::DimensionMismatch(format!(
                    "state {s}: expected {joint} joint actions"
                )));
            }
            for (j, row) in self.transition[s].iter().enumerate() {
                check_row(row, n, &format!("T(.|{s},{j})"))?;
                if self.terminal[s] && row[s] != 1.0 {
                    return Err(invalid(&format!("terminal state {s} must self-loop")));
                }
            }
            for (j, r) in self.rewards[s].iter().enumerate() {
                if r.len() != self.num_players {
                    return Err(LonrError::DimensionMismatch(format!(
                        "state {s}, joint {j}: {} rewards for {} players",
                        r.len(),
                        self.num_players
                    )));
                }
                if r.iter().any(|x| !x.is_finite()) {
                    return Err(LonrError::NonFinite(format!("reward at ({s}, {j})")));
                }
                if self.terminal[s] && r.iter().any(|x| *x != 0.0) {
                    return Err(invalid(&format!("terminal state {s} must pay 0")));
                }
                if self.zero_sum && r.iter().sum::<f64>().abs() > ROW_SUM_TOL {
                    return Err(invalid(&format!(
                        "zero-sum game has rewards {r:?} at ({s}, {j})"
                    )));
                }
            }
        }
        if self.start_states.is_empty() || self.start_states.iter().any(|s| *s >= n) {
            return Err(invalid(
                "start states must be a non-empty list of valid states",
            ));
        }
        Ok(())
    }
}

impl TryFrom<GameDoc> for MarkovGameSpec {
    type Error = LonrError;

    fn try_from(doc: GameDoc) -> Result<Self> {
        let game = Self {
            num_players: doc.num_players,
            action_sets: doc.action_sets,
            controller: doc.controller,
            transition: doc.transition,
            rewards: doc.rewards,
            discount: doc.discount,
            terminal: doc.terminal,
            zero_sum: doc.zero_sum,
            start_states: if doc.start_states.is_empty() {
                vec![0]
            } else {
                doc.start_states
            },
        };
        game.validate()?;
        Ok(game)
    }
}

impl From<MarkovGameSpec> for GameDoc {
    fn from(game: MarkovGameSpec) -> Self {
        Self {
            num_players: game.num_players,
            action_sets: game.action_sets,
            controller: game.controller,
            transition: game.transition,
            rewards: game.rewards,
            discount: game.discount,
            terminal: game.terminal,
            zero_sum: game.zero_sum,
            start_states: game.start_states,
        }
    }
}

fn invalid(msg: &str) -> LonrError {
    LonrError::InvalidEnvironment(msg.to_string())
}

fn check_row(row: &[f64], num_states: usize, what: &str) -> Result<()> {
    if row.len() != num_states {
        return Err(LonrError::DimensionMismatch(format!(
            "{what} has {} entries for {num_states} states",
            row.len()
        )));
    }
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(invalid(&format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > ROW_SUM_TOL {
        return Err(invalid(&format!("{what} sums to {total}")));
    }
    Ok(())
}

fn check_rewards(table: &[Vec<f64>], terminal: &[bool], what: &str) -> Result<()> {
    for (s, row) in table.iter().enumerate() {
        if row.iter().any(|r| !r.is_finite()) {
            return Err(LonrError::NonFinite(format!("{what} in state {s}")));
        }
        if terminal[s] && row.iter().any(|r| *r != 0.0) {
            return Err(invalid(&format!("terminal state {s} must pay 0 ({what})")));
        }
    }
    Ok(())
}

pub(crate) fn sample_index<R: rand::Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > 0.0 {
            last = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last
}
