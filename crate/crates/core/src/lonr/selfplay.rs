use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::run::Recorder;
use super::{Algorithm, LocalLearners, RunConfig, RunResult, Selector, StateSelection};
use crate::env_model::{induced_mdp, MarkovGameSpec};
use crate::error::{LonrError, Result};
use crate::minimizers::ActionDistribution;

/// Steps after which an unfinished evaluation game counts as a 0-0 draw.
pub const EPISODE_STEP_CAP: usize = 10_000;

/// Centralized self-play: every player runs LONR on the MDP induced by the
/// others' current policies.
///
/// All players update from the same snapshot of the policy profile. The
/// asynchronous and bandit variants select one game state per iteration,
/// shared by all players; the on-policy trajectory samples every player's
/// exploratory policy to form the joint action.
pub fn run_selfplay(game: &MarkovGameSpec, config: &RunConfig) -> Result<Vec<RunResult>> {
    config.validate()?;
    let players = game.num_players();
    let mut agents = (0..players)
        .map(|n| {
            LocalLearners::new(
                &game.player_actions(n),
                config.minimizer,
                &config.params,
                config.initial_q,
                config.initial_policy_of(n),
                config.seed,
                n,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut recorders: Vec<Recorder> = (0..players)
        .map(|n| Recorder::new(config, n, Some(game.reward_bound())))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut selector = Selector::new(config.selection, config.explore_epsilon);
    let all_states: Vec<usize> = (0..game.num_states()).collect();

    for t in 0..config.iterations {
        let profile: Vec<Vec<ActionDistribution>> =
            agents.iter().map(LocalLearners::current_policies).collect();
        let mdps = (0..players)
            .map(|n| induced_mdp(game, n, &profile))
            .collect::<Result<Vec<_>>>()?;
        let values: Vec<Option<Vec<f64>>> = agents
            .iter()
            .zip(&mdps)
            .zip(&recorders)
            .map(|((agent, mdp), rec)| rec.wants_xi().then(|| agent.expected_values(mdp)))
            .collect();

        let updated = match config.algorithm {
            Algorithm::LonrV => {
                for (agent, mdp) in agents.iter_mut().zip(&mdps) {
                    agent.lonr_v_iteration(mdp, t)?;
                }
                all_states.clone()
            }
            Algorithm::LonrA => {
                let s = selector.select(game.num_states(), game.start_states(), &mut rng);
                for (agent, mdp) in agents.iter_mut().zip(&mdps) {
                    agent.lonr_a_update(mdp, s, t)?;
                }
                if selector.mode() == StateSelection::OnPolicy {
                    let joint: Vec<usize> = agents
                        .iter()
                        .map(|a| selector.behaviour(a.policy(s)).sample(&mut rng))
                        .collect();
                    step_trajectory(game, &mut selector, s, &joint, &mut rng);
                }
                vec![s]
            }
            Algorithm::LonrB => {
                let s = selector.select(game.num_states(), game.start_states(), &mut rng);
                let mut joint = Vec::with_capacity(players);
                for (agent, mdp) in agents.iter_mut().zip(&mdps) {
                    let (action, _) =
                        agent.lonr_b_update(mdp, s, t, config.sarsa_bandit, &mut rng)?;
                    joint.push(action);
                }
                step_trajectory(game, &mut selector, s, &joint, &mut rng);
                vec![s]
            }
        };

        for (((rec, agent), mdp), v) in recorders.iter_mut().zip(&agents).zip(&mdps).zip(values) {
            rec.after_step(agent, mdp, config.algorithm, t, &updated, v)?;
        }
    }
    Ok(recorders
        .into_iter()
        .zip(agents)
        .map(|(rec, agent)| rec.finish(agent))
        .collect())
}

fn step_trajectory<R: Rng + ?Sized>(
    game: &MarkovGameSpec,
    selector: &mut Selector,
    state: usize,
    joint: &[usize],
    rng: &mut R,
) {
    let j = game.joint_index(state, joint);
    let next = game.sample_next(state, j, rng);
    selector.advance(next, game.is_terminal(next), game.start_states(), rng);
}

/// Mean undiscounted score per player over simulated games.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub episodes: usize,
    pub mean_scores: Vec<f64>,
    /// Games stopped at the step cap and scored as draws.
    pub capped: usize,
}

/// Plays `episodes` games with every player sampling from `policies[player][state]`.
///
/// Start states are drawn without replacement from shuffled blocks of the
/// game's start states, so each start appears equally often up to the final
/// partial block.
pub fn evaluate_policies<R: Rng + ?Sized>(
    game: &MarkovGameSpec,
    policies: &[Vec<ActionDistribution>],
    episodes: usize,
    rng: &mut R,
) -> Result<Evaluation> {
    if episodes == 0 {
        return Err(LonrError::EmptyInput("zero evaluation episodes".into()));
    }
    let players = game.num_players();
    let shape_ok = policies.len() == players
        && policies.iter().enumerate().all(|(n, per_state)| {
            per_state.len() == game.num_states()
                && per_state
                    .iter()
                    .enumerate()
                    .all(|(s, p)| p.num_actions() == game.num_actions(s, n))
        });
    if !shape_ok {
        return Err(LonrError::DimensionMismatch(
            "policies do not match the game's action sets".into(),
        ));
    }

    let mut totals = vec![0.0; players];
    let mut capped = 0;
    let mut block: Vec<usize> = Vec::new();
    let mut joint = vec![0; players];
    for _ in 0..episodes {
        if block.is_empty() {
            block = game.start_states().to_vec();
            block.shuffle(rng);
        }
        let mut s = block.pop().expect("start states are non-empty");
        let mut scores = vec![0.0; players];
        let mut finished = false;
        for _ in 0..EPISODE_STEP_CAP {
            if game.is_terminal(s) {
                finished = true;
                break;
            }
            for (n, a) in joint.iter_mut().enumerate() {
                *a = policies[n][s].sample(rng);
            }
            let j = game.joint_index(s, &joint);
            for (score, r) in scores.iter_mut().zip(game.rewards(s, j)) {
                *score += r;
            }
            s = game.sample_next(s, j, rng);
        }
        if finished || game.is_terminal(s) {
            totals.iter_mut().zip(&scores).for_each(|(t, x)| *t += x);
        } else {
            capped += 1;
        }
    }
    Ok(Evaluation {
        episodes,
        mean_scores: totals.iter().map(|t| t / episodes as f64).collect(),
        capped,
    })
}
