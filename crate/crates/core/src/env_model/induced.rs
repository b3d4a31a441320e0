use super::{MarkovGameSpec, MdpSpec};
use crate::error::{LonrError, Result};
use crate::minimizers::ActionDistribution;

/// The MDP faced by `player` when every other player follows `profile`.
///
/// `profile[m][s]` is player `m`'s current policy in state `s`; the entry for
/// `player` itself is ignored (it may hold anything of the right shape).
/// Rewards and transitions are expectations over the opponents' joint mix.
pub fn induced_mdp(
    game: &MarkovGameSpec,
    player: usize,
    profile: &[Vec<ActionDistribution>],
) -> Result<MdpSpec> {
    let n_players = game.num_players();
    if player >= n_players {
        return Err(LonrError::DimensionMismatch(format!(
            "player {player} out of range for {n_players} players"
        )));
    }
    if profile.len() != n_players {
        return Err(LonrError::DimensionMismatch(format!(
            "profile has {} players, game has {n_players}",
            profile.len()
        )));
    }
    let n_states = game.num_states();
    for (m, policies) in profile.iter().enumerate() {
        if m == player {
            continue;
        }
        if policies.len() != n_states {
            return Err(LonrError::DimensionMismatch(format!(
                "player {m} has policies for {} of {n_states} states",
                policies.len()
            )));
        }
        for (s, pi) in policies.iter().enumerate() {
            if pi.num_actions() != game.num_actions(s, m) {
                return Err(LonrError::DimensionMismatch(format!(
                    "player {m} policy in state {s} has {} actions, expected {}",
                    pi.num_actions(),
                    game.num_actions(s, m)
                )));
            }
        }
    }

    let mut transition = Vec::with_capacity(n_states);
    let mut reward = Vec::with_capacity(n_states);
    for s in 0..n_states {
        let own = game.num_actions(s, player);
        let mut rows = vec![vec![0.0; n_states]; own];
        let mut rs = vec![0.0; own];
        for j in 0..game.num_joint_actions(s) {
            let actions = game.decode_joint(s, j);
            let weight: f64 = (0..n_players)
                .filter(|m| *m != player)
                .map(|m| profile[m][s].probs()[actions[m]])
                .product();
            if weight == 0.0 {
                continue;
            }
            let a = actions[player];
            rs[a] += weight * game.rewards(s, j)[player];
            for (acc, p) in rows[a].iter_mut().zip(game.transition_row(s, j)) {
                *acc += weight * p;
            }
        }
        transition.push(rows);
        reward.push(rs);
    }
    Ok(MdpSpec::from_parts_unchecked(
        transition,
        reward,
        game.discount(),
        game.terminal_flags().to_vec(),
        game.start_states().to_vec(),
    ))
}
