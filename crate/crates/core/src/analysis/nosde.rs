use serde::{Deserialize, Serialize};

use crate::error::{LonrError, Result};

/// Stationary equilibrium of the NoSDE game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NosdeEquilibrium {
    /// Player 0's probability of SEND in its state.
    pub p_send: f64,
    /// Player 1's probability of SEND in its state.
    pub q_send: f64,
    /// Player 0's Q-value for both actions in its state.
    pub value: f64,
}

/// Closed-form solution of the two indifference conditions.
///
/// Interior only for `gamma` in `(1/2, 1)`: at `1/2` player 0 would send with
/// probability 1.
pub fn nosde_equilibrium(discount: f64) -> Result<NosdeEquilibrium> {
    if !(discount > 0.5 && discount < 1.0) {
        return Err(LonrError::InvalidParameter(format!(
            "no interior NoSDE equilibrium at discount {discount}; need (1/2, 1)"
        )));
    }
    Ok(NosdeEquilibrium {
        p_send: 1.0 / (2.0 * discount),
        q_send: (3.0 * discount - 1.0) / (4.0 * discount),
        value: 1.0 / (1.0 - discount),
    })
}

const GRID: usize = 10_000;

/// Brute-force equilibrium: scan the opponent's mixing probability on a
/// `1e-4` grid, compute the best-response advantage of KEEP over SEND by exact
/// policy evaluation, and bisect the bracketed sign change.
///
/// Returns `(p_send, q_send)`.
pub fn nosde_best_response_oracle(discount: f64) -> Result<(f64, f64)> {
    if !(discount > 0.0 && discount < 1.0) {
        return Err(LonrError::InvalidParameter(format!("discount {discount}")));
    }
    // Player 0 is indifferent at player 1's equilibrium mix, and vice versa.
    let q = indifference_root(|q| keep_advantage_player0(discount, q))?;
    let p = indifference_root(|p| keep_advantage_player1(discount, p))?;
    Ok((p, q))
}

fn indifference_root(advantage: impl Fn(f64) -> f64) -> Result<f64> {
    let mut prev_x = 0.0;
    let mut prev = advantage(prev_x);
    for i in 1..=GRID {
        let x = i as f64 / GRID as f64;
        let g = advantage(x);
        if prev == 0.0 || prev.signum() != g.signum() {
            let root = if prev == 0.0 {
                prev_x
            } else {
                bisect(&advantage, prev_x, x)
            };
            // A root on the boundary is a pure strategy, not an interior mix.
            if root > 1e-9 && root < 1.0 - 1e-9 {
                return Ok(root);
            }
            break;
        }
        prev_x = x;
        prev = g;
    }
    Err(LonrError::InvalidParameter(
        "no interior indifference point".into(),
    ))
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let lo_sign = f(lo).signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid).signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Values of a two-state chain: solves `(I - gamma P) v = r`.
fn evaluate(discount: f64, p: [[f64; 2]; 2], r: [f64; 2]) -> [f64; 2] {
    let a = 1.0 - discount * p[0][0];
    let b = -discount * p[0][1];
    let c = -discount * p[1][0];
    let d = 1.0 - discount * p[1][1];
    let det = a * d - b * c;
    [(r[0] * d - b * r[1]) / det, (a * r[1] - c * r[0]) / det]
}

/// Q(KEEP) - Q(SEND) in state 0 for player 0's best response when player 1
/// sends with probability `q`.
fn keep_advantage_player0(discount: f64, q: f64) -> f64 {
    // State 1 belongs to player 1: KEEP pays player 0 three and stays, SEND pays 0 and returns.
    let s1_row = [q, 1.0 - q];
    let s1_reward = 3.0 * (1.0 - q);
    let v = [
        evaluate(discount, [[1.0, 0.0], s1_row], [1.0, s1_reward]),
        evaluate(discount, [[0.0, 1.0], s1_row], [0.0, s1_reward]),
    ]
    .into_iter()
    .fold([f64::NEG_INFINITY; 2], |acc, v| {
        [acc[0].max(v[0]), acc[1].max(v[1])]
    });
    (1.0 + discount * v[0]) - discount * v[1]
}

/// Q(KEEP) - Q(SEND) in state 1 for player 1's best response when player 0
/// sends with probability `p`.
fn keep_advantage_player1(discount: f64, p: f64) -> f64 {
    // State 0 belongs to player 0: SEND pays player 1 three and moves on, KEEP pays 0.
    let s0_row = [1.0 - p, p];
    let s0_reward = 3.0 * p;
    let v = [
        evaluate(discount, [s0_row, [0.0, 1.0]], [s0_reward, 1.0]),
        evaluate(discount, [s0_row, [1.0, 0.0]], [s0_reward, 0.0]),
    ]
    .into_iter()
    .fold([f64::NEG_INFINITY; 2], |acc, v| {
        [acc[0].max(v[0]), acc[1].max(v[1])]
    });
    (1.0 + discount * v[1]) - discount * v[0]
}
