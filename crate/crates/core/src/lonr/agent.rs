use rand::Rng;

use super::{learner_seed, QTable, StateSelection};
use crate::env_model::MdpSpec;
use crate::error::{LonrError, Result};
use crate::minimizers::{
    ActionDistribution, Minimizer, MinimizerKind, MinimizerParams, RegretAccumulator,
};

/// One learner per state plus the shared Q table.
#[derive(Debug, Clone)]
pub struct LocalLearners {
    q: QTable,
    learners: Vec<Minimizer>,
    regrets: Vec<RegretAccumulator>,
    /// Last action played in each state by the bandit driver.
    last_actions: Vec<Option<usize>>,
}

impl LocalLearners {
    pub fn new(
        actions_per_state: &[usize],
        kind: MinimizerKind,
        params: &MinimizerParams,
        initial_q: f64,
        initial_policy: &[Vec<f64>],
        seed: u64,
        player: usize,
    ) -> Result<Self> {
        if !initial_policy.is_empty() && initial_policy.len() != actions_per_state.len() {
            return Err(LonrError::DimensionMismatch(format!(
                "initial policy for {} states, expected {}",
                initial_policy.len(),
                actions_per_state.len()
            )));
        }
        let learners = actions_per_state
            .iter()
            .enumerate()
            .map(|(s, n)| {
                let params = params.with_seed(learner_seed(seed, params.seed, player, s));
                let learner = Minimizer::new(kind, *n, params)?;
                match initial_policy.get(s) {
                    Some(probs) => {
                        learner.with_initial_policy(ActionDistribution::new(probs.clone())?)
                    }
                    None => Ok(learner),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            q: QTable::new(actions_per_state, initial_q),
            learners,
            regrets: actions_per_state
                .iter()
                .map(|n| RegretAccumulator::new(*n))
                .collect(),
            last_actions: vec![None; actions_per_state.len()],
        })
    }

    pub fn q(&self) -> &QTable {
        &self.q
    }

    pub fn learners(&self) -> &[Minimizer] {
        &self.learners
    }

    pub fn policy(&self, state: usize) -> &ActionDistribution {
        self.learners[state].current_policy()
    }

    pub fn current_policies(&self) -> Vec<ActionDistribution> {
        self.learners
            .iter()
            .map(|l| l.current_policy().clone())
            .collect()
    }

    pub fn average_policies(&self) -> Vec<ActionDistribution> {
        self.learners
            .iter()
            .map(Minimizer::average_policy)
            .collect()
    }

    /// Per-state average empirical regret of the policies played against the backups.
    pub fn regrets(&self) -> Vec<f64> {
        self.regrets
            .iter()
            .map(RegretAccumulator::average_regret)
            .collect()
    }

    /// `pi_t(x) . Q_t(x)` for every state; terminal states are worth 0.
    pub fn expected_values(&self, mdp: &MdpSpec) -> Vec<f64> {
        self.learners
            .iter()
            .enumerate()
            .map(|(s, l)| {
                if mdp.is_terminal(s) {
                    0.0
                } else {
                    l.current_policy().expect(self.q.row(s))
                }
            })
            .collect()
    }

    fn check_shape(&self, mdp: &MdpSpec) -> Result<()> {
        let ok = mdp.num_states() == self.learners.len()
            && self
                .learners
                .iter()
                .enumerate()
                .all(|(s, l)| l.num_actions() == mdp.num_actions(s));
        if ok {
            Ok(())
        } else {
            Err(LonrError::DimensionMismatch(
                "learner action counts do not match the MDP".into(),
            ))
        }
    }

    fn backup_row(mdp: &MdpSpec, t: u64, values: &[f64], s: usize) -> Vec<f64> {
        if mdp.is_terminal(s) {
            return vec![0.0; mdp.num_actions(s)];
        }
        let gamma = mdp.discount();
        mdp.rewards_at(t)[s]
            .iter()
            .enumerate()
            .map(|(a, r)| {
                let next: f64 = mdp
                    .transition_row(s, a)
                    .iter()
                    .zip(values)
                    .filter(|(p, _)| **p > 0.0)
                    .map(|(p, v)| p * v)
                    .sum();
                r + gamma * next
            })
            .collect()
    }

    /// Writes a full-information backup: regret is scored against the policy
    /// in force before the update, then the learner observes the new row.
    fn apply(&mut self, s: usize, row: Vec<f64>) -> Result<()> {
        if let Some(x) = row.iter().find(|x| !x.is_finite()) {
            return Err(LonrError::NonFinite(format!("backup {x} in state {s}")));
        }
        let policy = self.learners[s].current_policy().clone();
        self.regrets[s].record(&row, &policy);
        self.learners[s].observe(&row)?;
        self.q.set_row(s, row);
        Ok(())
    }

    /// One synchronous sweep: all states are backed up from the same snapshot
    /// of `Q_t` and `pi_t`, then every learner observes its new row.
    pub fn lonr_v_iteration(&mut self, mdp: &MdpSpec, t: u64) -> Result<()> {
        self.check_shape(mdp)?;
        let values = self.expected_values(mdp);
        let rows: Vec<Vec<f64>> = (0..mdp.num_states())
            .map(|s| Self::backup_row(mdp, t, &values, s))
            .collect();
        for (s, row) in rows.into_iter().enumerate() {
            self.q.add_expected_value(s, values[s]);
            self.apply(s, row)?;
        }
        Ok(())
    }

    /// Backs up every action of `state` from the latest values of the other states.
    pub fn lonr_a_update(&mut self, mdp: &MdpSpec, state: usize, t: u64) -> Result<()> {
        self.check_shape(mdp)?;
        let values = self.expected_values(mdp);
        let row = Self::backup_row(mdp, t, &values, state);
        self.q.add_expected_value(state, values[state]);
        self.apply(state, row)
    }

    /// Bandit update of `state`: samples `a ~ pi_t(state)` and `s' ~ P(.|state, a)`.
    ///
    /// The played entry becomes `(r + gamma pi_t(s') . Q_t(s')) / pi_t(a)` and the
    /// others 0; the learner sees the raw feedback. With `sarsa` the played entry
    /// is instead `r + gamma Q_t(s', a')`, where `a'` is the action last played in
    /// `s'`, and the rest of the row is left alone. Returns `(a, s')`.
    pub fn lonr_b_update<R: Rng + ?Sized>(
        &mut self,
        mdp: &MdpSpec,
        state: usize,
        t: u64,
        sarsa: bool,
        rng: &mut R,
    ) -> Result<(usize, usize)> {
        self.check_shape(mdp)?;
        if !self.learners[state].kind().is_bandit() {
            return Err(LonrError::InvalidParameter(format!(
                "bandit updates need a bandit learner, got {}",
                self.learners[state].kind()
            )));
        }
        let policy = self.learners[state].current_policy().clone();
        let action = policy.sample(rng);
        let next = mdp.sample_next(state, action, rng);
        let reward = mdp.rewards_at(t)[state][action];
        let prob = policy.probs()[action];
        assert!(prob > 0.0, "sampled an action with zero probability");

        let bootstrap = if mdp.is_terminal(next) {
            0.0
        } else if sarsa {
            let a_next = match self.last_actions[next] {
                Some(a) => a,
                None => self.learners[next].current_policy().sample(rng),
            };
            self.q.row(next)[a_next]
        } else {
            self.learners[next]
                .current_policy()
                .expect(self.q.row(next))
        };
        let feedback = reward + mdp.discount() * bootstrap;
        if !feedback.is_finite() {
            return Err(LonrError::NonFinite(format!(
                "bandit feedback in state {state}"
            )));
        }

        let mut estimate = vec![0.0; policy.num_actions()];
        estimate[action] = feedback / prob;
        self.regrets[state].record(&estimate, &policy);
        self.learners[state].observe_bandit(action, feedback)?;
        if sarsa {
            self.q.set_entry(state, action, feedback);
        } else {
            self.q.set_row(state, estimate);
        }
        self.last_actions[state] = Some(action);
        Ok((action, next))
    }
}

/// Chooses the state updated by the asynchronous and bandit drivers.
#[derive(Debug, Clone)]
pub struct Selector {
    mode: StateSelection,
    epsilon: f64,
    position: Option<usize>,
}

impl Selector {
    pub fn new(mode: StateSelection, epsilon: f64) -> Self {
        Self {
            mode,
            epsilon,
            position: None,
        }
    }

    pub fn mode(&self) -> StateSelection {
        self.mode
    }

    pub fn select<R: Rng + ?Sized>(
        &mut self,
        num_states: usize,
        starts: &[usize],
        rng: &mut R,
    ) -> usize {
        match self.mode {
            StateSelection::Uniform => rng.random_range(0..num_states),
            StateSelection::OnPolicy => match self.position {
                Some(s) => s,
                None => {
                    let s = starts[rng.random_range(0..starts.len())];
                    self.position = Some(s);
                    s
                }
            },
        }
    }

    /// Behaviour policy of the trajectory: `policy` mixed with uniform exploration.
    pub fn behaviour(&self, policy: &ActionDistribution) -> ActionDistribution {
        policy.mix_uniform(self.epsilon)
    }

    /// Moves the trajectory to `next`, restarting when it is terminal.
    pub fn advance<R: Rng + ?Sized>(
        &mut self,
        next: usize,
        terminal: bool,
        starts: &[usize],
        rng: &mut R,
    ) {
        if self.mode == StateSelection::OnPolicy {
            self.position = Some(if terminal {
                starts[rng.random_range(0..starts.len())]
            } else {
                next
            });
        }
    }
}
