//! Oracles and bound checks.

mod last_iterate;
mod nosde;
mod xi;

use serde::{Deserialize, Serialize};

use crate::env_model::MdpSpec;
use crate::error::{LonrError, Result};
use crate::lonr::QTable;

pub use last_iterate::{last_iterate_report, last_iterate_value_gap, LastIterateReport};
pub use nosde::{nosde_best_response_oracle, nosde_equilibrium, NosdeEquilibrium};
pub use xi::{xi_at, xi_diagnostic, XiTrace};

/// Value-iteration sweeps allowed before `solve_q_star` gives up.
pub const SOLVER_ITERATION_CAP: usize = 1_000_000;

/// Dense `[state][action]` table.
pub type Table = Vec<Vec<f64>>;

/// One recorded iteration of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: u64,
    pub player: usize,
    /// Whether each state was updated in this iteration.
    pub selected: Vec<bool>,
    /// Per-state update counters `k(s)`.
    pub counts: Vec<u64>,
    /// `||Qbar - T Qbar||` for the inclusive average.
    pub residual: f64,
    pub q: Table,
    pub q_avg: Table,
    pub policy: Table,
    pub avg_policy: Table,
    /// Per-state average empirical regret.
    pub regret: Vec<f64>,
}

/// Outcome of one executable bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub iteration: u64,
    pub measured: f64,
    pub bound: f64,
    pub holds: bool,
}

impl BoundCheck {
    /// `measured <= bound` up to a relative rounding allowance.
    pub fn new(name: &str, iteration: u64, measured: f64, bound: f64) -> Self {
        let slack = 1e-9 * bound.abs().max(1.0);
        Self {
            name: name.to_string(),
            iteration,
            measured,
            bound,
            holds: measured <= bound + slack,
        }
    }

    pub fn slack(&self) -> f64 {
        self.bound - self.measured
    }
}

/// Running summary of a bound checked at every iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    pub name: String,
    pub checks: u64,
    pub failures: u64,
    /// The check with the least slack.
    pub tightest: Option<BoundCheck>,
    pub first_failure: Option<BoundCheck>,
}

impl BoundSummary {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            checks: 0,
            failures: 0,
            tightest: None,
            first_failure: None,
        }
    }

    pub fn add(&mut self, check: BoundCheck) {
        self.checks += 1;
        if !check.holds {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(check.clone());
            }
        }
        if self
            .tightest
            .as_ref()
            .is_none_or(|t| check.slack() < t.slack())
        {
            self.tightest = Some(check);
        }
    }

    pub fn holds(&self) -> bool {
        self.failures == 0
    }
}

pub fn sup_norm(table: &[Vec<f64>]) -> f64 {
    table
        .iter()
        .flatten()
        .fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

pub fn sup_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

fn check_shape(q: &[Vec<f64>], mdp: &MdpSpec) -> Result<()> {
    let ok = q.len() == mdp.num_states()
        && q.iter()
            .enumerate()
            .all(|(s, row)| row.len() == mdp.num_actions(s));
    if ok {
        Ok(())
    } else {
        Err(LonrError::DimensionMismatch(
            "Q table shape does not match the MDP".into(),
        ))
    }
}

/// `(TQ)(s,a) = r(s,a) + gamma * sum_s' P(s'|s,a) max_a' Q(s',a')` on the time-invariant rewards.
pub fn bellman_operator(q: &[Vec<f64>], mdp: &MdpSpec) -> Result<Table> {
    check_shape(q, mdp)?;
    Ok(apply_bellman(q, mdp))
}

fn apply_bellman(q: &[Vec<f64>], mdp: &MdpSpec) -> Table {
    let gamma = mdp.discount();
    let best: Vec<f64> = q
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    mdp.rewards()
        .iter()
        .enumerate()
        .map(|(s, row)| {
            row.iter()
                .enumerate()
                .map(|(a, r)| {
                    let next: f64 = mdp
                        .transition_row(s, a)
                        .iter()
                        .zip(&best)
                        .filter(|(p, _)| **p > 0.0)
                        .map(|(p, v)| p * v)
                        .sum();
                    r + gamma * next
                })
                .collect()
        })
        .collect()
}

/// Value iteration from zero until the fixed point is within `tol`.
///
/// For `gamma < 1` the stopping rule `||Q_{i+1} - Q_i|| <= tol (1 - gamma) / gamma`
/// bounds the distance to `Q*` by `tol`; for `gamma = 1` it iterates until the
/// table stops changing.
pub fn solve_q_star(mdp: &MdpSpec, tol: f64) -> Result<Table> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(LonrError::InvalidParameter(format!("tolerance {tol}")));
    }
    let gamma = mdp.discount();
    let threshold = if gamma < 1.0 {
        if gamma == 0.0 {
            f64::INFINITY
        } else {
            tol * (1.0 - gamma) / gamma
        }
    } else {
        0.0
    };
    let mut q: Table = (0..mdp.num_states())
        .map(|s| vec![0.0; mdp.num_actions(s)])
        .collect();
    for _ in 0..SOLVER_ITERATION_CAP {
        let next = apply_bellman(&q, mdp);
        let change = sup_distance(&next, &q);
        q = next;
        if change <= threshold {
            return Ok(q);
        }
    }
    Err(LonrError::IterationCap(SOLVER_ITERATION_CAP))
}

/// `||Q - TQ||`.
pub fn bellman_residual(q: &[Vec<f64>], mdp: &MdpSpec) -> Result<f64> {
    check_shape(q, mdp)?;
    Ok(sup_distance(q, &apply_bellman(q, mdp)))
}

/// Distance to `Q*` implied by a Bellman residual: `residual / (1 - gamma)`.
pub fn residual_to_error_bound(residual: f64, discount: f64) -> f64 {
    residual / (1.0 - discount)
}

/// Range bound `||r|| / (1 - gamma) + 2 ||Q_0||` on `||Q_k - Q_0||`.
pub fn q_range_bound(reward_bound: f64, discount: f64, initial_norm: f64) -> f64 {
    reward_bound / (1.0 - discount) + 2.0 * initial_norm
}

/// Checks `||Q_k - Q_0|| <= ||r|| / (1 - gamma) + 2 ||Q_0||`.
///
/// `reward_bound` must cover every reward table seen so far, which in self-play
/// means the game's bound rather than the current induced MDP's.
pub fn check_q_range(q: &QTable, reward_bound: f64, discount: f64, iteration: u64) -> BoundCheck {
    let bound = q_range_bound(reward_bound, discount, sup_norm(q.initial()));
    BoundCheck::new(
        "q_range",
        iteration,
        sup_distance(q.values(), q.initial()),
        bound,
    )
}

/// Measured `rho_hat`: for each state, `max_a Qunder_k(s, a)` against the
/// running mean of `pi_t(s) . Q_t(s)` over the same iterations.
pub fn measured_average_regret(q: &QTable) -> Result<f64> {
    let k = synchronous_count(q)?;
    let avg = q.avg_exclusive();
    Ok(avg
        .iter()
        .zip(q.expected_value_sums())
        .map(|(row, ev)| {
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (best - ev / k as f64).abs()
        })
        .fold(0.0, f64::max))
}

/// Checks `||Qunder_k - T Qunder_k|| <= (||r|| / (1 - gamma) + 2 ||Q_0||) / k + gamma * rho_hat`.
pub fn check_average_residual(q: &QTable, mdp: &MdpSpec) -> Result<BoundCheck> {
    let k = synchronous_count(q)?;
    let avg = q.avg_exclusive();
    let measured = bellman_residual(&avg, mdp)?;
    let range = q_range_bound(mdp.reward_bound(), mdp.discount(), sup_norm(q.initial()));
    let bound = range / k as f64 + mdp.discount() * measured_average_regret(q)?;
    Ok(BoundCheck::new("average_residual", k, measured, bound))
}

fn synchronous_count(q: &QTable) -> Result<u64> {
    let counts = q.counts();
    let k = counts.first().copied().unwrap_or(0);
    if k == 0 {
        return Err(LonrError::EmptyInput("no sweeps recorded".into()));
    }
    if counts.iter().any(|c| *c != k) {
        return Err(LonrError::InvalidParameter(
            "average-residual check needs synchronous updates".into(),
        ));
    }
    Ok(k)
}
