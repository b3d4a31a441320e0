use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Algorithm, LocalLearners, RunConfig, RunResult, Selector, StateSelection};
use crate::analysis::{
    bellman_residual, check_average_residual, check_q_range, BoundSummary, TraceRecord, XiTrace,
};
use crate::env_model::MdpSpec;
use crate::error::{LonrError, Result};

/// Collects the optional per-iteration outputs of one player.
pub(super) struct Recorder {
    player: usize,
    every: u64,
    /// Iterations after this one are all recorded.
    dense_after: u64,
    check_bounds: bool,
    /// Reward bound covering every MDP the player faces; `None` uses each MDP's own.
    reward_bound: Option<f64>,
    trace: Vec<TraceRecord>,
    xi: Option<XiTrace>,
    range: BoundSummary,
    residual: BoundSummary,
}

impl Recorder {
    pub(super) fn new(config: &RunConfig, player: usize, reward_bound: Option<f64>) -> Self {
        Self {
            player,
            every: config.trace.every,
            dense_after: config.iterations.saturating_sub(config.trace.tail),
            check_bounds: config.check_bounds,
            reward_bound,
            trace: Vec::new(),
            xi: config.trace.xi.then(XiTrace::default),
            range: BoundSummary::new("q_range"),
            residual: BoundSummary::new("average_residual"),
        }
    }

    pub(super) fn wants_xi(&self) -> bool {
        self.xi.is_some()
    }

    /// Called after iteration `t` (0-based). `values` holds the pre-update
    /// expected values when the xi trace is on.
    pub(super) fn after_step(
        &mut self,
        agent: &LocalLearners,
        mdp: &MdpSpec,
        algorithm: Algorithm,
        t: u64,
        updated: &[usize],
        values: Option<Vec<f64>>,
    ) -> Result<()> {
        let iteration = t + 1;
        // The range bound is vacuous at gamma = 1 and does not cover importance-weighted entries.
        if mdp.discount() < 1.0 && algorithm != Algorithm::LonrB {
            let bound = self.reward_bound.unwrap_or_else(|| mdp.reward_bound());
            let check = check_q_range(agent.q(), bound, mdp.discount(), iteration);
            if !check.holds {
                return Err(LonrError::BoundViolated(format!(
                    "||Q_k - Q_0|| = {} exceeds {} at iteration {iteration}",
                    check.measured, check.bound
                )));
            }
            if self.check_bounds {
                self.range.add(check);
            }
        }
        // The average-residual bound is stated for one fixed MDP.
        let fixed_mdp = self.reward_bound.is_none();
        if self.check_bounds && fixed_mdp && algorithm == Algorithm::LonrV && mdp.discount() < 1.0 {
            self.residual.add(check_average_residual(agent.q(), mdp)?);
        }
        if let (Some(xi), Some(values)) = (self.xi.as_mut(), values) {
            xi.record(updated.to_vec(), values);
        }
        let thinned = self.every > 0 && iteration.is_multiple_of(self.every);
        if thinned || iteration > self.dense_after {
            let q_avg = agent.q().avg_inclusive();
            let mut selected = vec![false; mdp.num_states()];
            updated.iter().for_each(|s| selected[*s] = true);
            self.trace.push(TraceRecord {
                iteration,
                player: self.player,
                selected,
                counts: agent.q().counts().to_vec(),
                residual: bellman_residual(&q_avg, mdp)?,
                q: agent.q().values().clone(),
                q_avg,
                policy: agent
                    .current_policies()
                    .into_iter()
                    .map(Vec::from)
                    .collect(),
                avg_policy: agent
                    .average_policies()
                    .into_iter()
                    .map(Vec::from)
                    .collect(),
                regret: agent.regrets(),
            });
        }
        Ok(())
    }

    pub(super) fn finish(self, agent: LocalLearners) -> RunResult {
        let mut bounds = Vec::new();
        if self.check_bounds {
            bounds.push(self.range);
            if self.residual.checks > 0 {
                bounds.push(self.residual);
            }
        }
        RunResult {
            player: self.player,
            current_policy: agent.current_policies(),
            average_policy: agent.average_policies(),
            regret: agent.regrets(),
            learners: agent.learners().iter().map(|l| l.snapshot()).collect(),
            q: agent.q().clone(),
            trace: self.trace,
            xi: self.xi,
            bounds,
        }
    }
}

/// Runs the single-agent driver selected by `config.algorithm`.
pub fn run(mdp: &MdpSpec, config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let mut agent = LocalLearners::new(
        &mdp.actions_per_state(),
        config.minimizer,
        &config.params,
        config.initial_q,
        config.initial_policy_of(0),
        config.seed,
        0,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut selector = Selector::new(config.selection, config.explore_epsilon);
    let mut recorder = Recorder::new(config, 0, None);
    let all_states: Vec<usize> = (0..mdp.num_states()).collect();

    for t in 0..config.iterations {
        let values = recorder.wants_xi().then(|| agent.expected_values(mdp));
        let updated = match config.algorithm {
            Algorithm::LonrV => {
                agent.lonr_v_iteration(mdp, t)?;
                all_states.clone()
            }
            Algorithm::LonrA => {
                let s = selector.select(mdp.num_states(), mdp.start_states(), &mut rng);
                agent.lonr_a_update(mdp, s, t)?;
                if selector.mode() == StateSelection::OnPolicy {
                    let action = selector.behaviour(agent.policy(s)).sample(&mut rng);
                    let next = mdp.sample_next(s, action, &mut rng);
                    selector.advance(next, mdp.is_terminal(next), mdp.start_states(), &mut rng);
                }
                vec![s]
            }
            Algorithm::LonrB => {
                let s = selector.select(mdp.num_states(), mdp.start_states(), &mut rng);
                let (_, next) = agent.lonr_b_update(mdp, s, t, config.sarsa_bandit, &mut rng)?;
                selector.advance(next, mdp.is_terminal(next), mdp.start_states(), &mut rng);
                vec![s]
            }
        };
        recorder.after_step(&agent, mdp, config.algorithm, t, &updated, values)?;
    }
    Ok(recorder.finish(agent))
}

/// The synchronous driver; rejects configs for the other variants.
pub fn run_lonr_v(mdp: &MdpSpec, config: &RunConfig) -> Result<RunResult> {
    if config.algorithm != Algorithm::LonrV {
        return Err(LonrError::InvalidParameter(format!(
            "run_lonr_v needs the synchronous algorithm, got {:?}",
            config.algorithm
        )));
    }
    run(mdp, config)
}
