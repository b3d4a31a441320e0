//! Per-state regret minimizers.
//!
//! A [`Minimizer`] is one online learner over a fixed action set. Seven update
//! rules share the same state layout: regret matching (RM), RM+, RM++ (clips
//! the instantaneous regret instead of the cumulative one), discounted CFR,
//! multiplicative weights (MWU), optimistic MWU and Exp3 for bandit feedback.
//!
//! Every rule keeps the current policy, a per-action tracker and a weighted sum
//! of past policies from which the average policy is read.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LonrError, Result};

/// Tolerance on the total mass of a distribution.
pub const DISTRIBUTION_TOL: f64 = 1e-9;

/// A probability vector over a finite action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ActionDistribution(Vec<f64>);

impl ActionDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(LonrError::EmptyInput(
                "distribution over zero actions".into(),
            ));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(LonrError::InvalidParameter(format!(
                "distribution entries must be finite and non-negative: {probs:?}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > DISTRIBUTION_TOL {
            return Err(LonrError::InvalidParameter(format!(
                "distribution sums to {total}, expected 1"
            )));
        }
        Ok(Self(probs))
    }

    pub fn uniform(num_actions: usize) -> Self {
        assert!(num_actions > 0, "uniform distribution over zero actions");
        Self(vec![1.0 / num_actions as f64; num_actions])
    }

    /// All mass on `action`.
    pub fn point(num_actions: usize, action: usize) -> Self {
        assert!(action < num_actions, "action {action} out of range");
        let mut probs = vec![0.0; num_actions];
        probs[action] = 1.0;
        Self(probs)
    }

    /// Normalizes non-negative weights; all-zero weights give the uniform distribution.
    pub fn from_weights(weights: &[f64]) -> Self {
        let total: f64 = weights.iter().sum();
        if total > 0.0 && total.is_finite() {
            Self(weights.iter().map(|w| w / total).collect())
        } else {
            Self::uniform(weights.len())
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn num_actions(&self) -> usize {
        self.0.len()
    }

    /// Expected value of `values` under this distribution.
    pub fn expect(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.0.len());
        self.0.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    /// Inverse-CDF sample; the last action with positive mass absorbs rounding slack.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, p) in self.0.iter().enumerate() {
            if *p > 0.0 {
                last_positive = i;
                acc += p;
                if u < acc {
                    return i;
                }
            }
        }
        last_positive
    }

    /// Entrywise mixture `(1 - eps) * self + eps * uniform`.
    pub fn mix_uniform(&self, eps: f64) -> Self {
        let n = self.0.len() as f64;
        Self(self.0.iter().map(|p| (1.0 - eps) * p + eps / n).collect())
    }
}

impl TryFrom<Vec<f64>> for ActionDistribution {
    type Error = LonrError;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<ActionDistribution> for Vec<f64> {
    fn from(dist: ActionDistribution) -> Self {
        dist.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MinimizerKind {
    #[serde(rename = "RM")]
    Rm,
    #[serde(rename = "RM+")]
    RmPlus,
    #[serde(rename = "RM++")]
    RmPlusPlus,
    #[serde(rename = "DCFR")]
    Dcfr,
    #[serde(rename = "MWU")]
    Mwu,
    #[serde(rename = "OMWU")]
    Omwu,
    #[serde(rename = "EXP3")]
    Exp3,
}

impl MinimizerKind {
    /// The six learners that consume full reward vectors.
    pub const FULL_INFORMATION: [MinimizerKind; 6] = [
        MinimizerKind::Rm,
        MinimizerKind::RmPlus,
        MinimizerKind::RmPlusPlus,
        MinimizerKind::Dcfr,
        MinimizerKind::Mwu,
        MinimizerKind::Omwu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MinimizerKind::Rm => "RM",
            MinimizerKind::RmPlus => "RM+",
            MinimizerKind::RmPlusPlus => "RM++",
            MinimizerKind::Dcfr => "DCFR",
            MinimizerKind::Mwu => "MWU",
            MinimizerKind::Omwu => "OMWU",
            MinimizerKind::Exp3 => "EXP3",
        }
    }

    pub fn is_bandit(self) -> bool {
        matches!(self, MinimizerKind::Exp3)
    }

    fn is_regret_matching(self) -> bool {
        matches!(
            self,
            MinimizerKind::Rm
                | MinimizerKind::RmPlus
                | MinimizerKind::RmPlusPlus
                | MinimizerKind::Dcfr
        )
    }
}

impl fmt::Display for MinimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MinimizerKind {
    type Err = LonrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RM" => Ok(MinimizerKind::Rm),
            "RM+" | "RMPLUS" | "RM_PLUS" => Ok(MinimizerKind::RmPlus),
            "RM++" | "RMPP" | "RMPLUSPLUS" | "RM_PLUS_PLUS" => Ok(MinimizerKind::RmPlusPlus),
            "DCFR" => Ok(MinimizerKind::Dcfr),
            "MWU" => Ok(MinimizerKind::Mwu),
            "OMWU" => Ok(MinimizerKind::Omwu),
            "EXP3" => Ok(MinimizerKind::Exp3),
            other => Err(LonrError::InvalidParameter(format!(
                "unknown minimizer `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizerParams {
    /// Learning rate of MWU, OMWU and Exp3.
    pub eta: f64,
    /// Number of times OMWU counts the most recent reward vector.
    pub optimism: u32,
    pub dcfr_alpha: f64,
    pub dcfr_beta: f64,
    /// Exponent of the DCFR average-policy discount.
    pub dcfr_gamma: f64,
    /// Seeds the internal sampler Exp3 uses when fed full reward vectors.
    pub seed: u64,
}

impl Default for MinimizerParams {
    fn default() -> Self {
        Self {
            eta: 0.1,
            optimism: 2,
            dcfr_alpha: 1.5,
            dcfr_beta: 0.0,
            dcfr_gamma: 2.0,
            seed: 0,
        }
    }
}

impl MinimizerParams {
    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_optimism(mut self, optimism: u32) -> Self {
        self.optimism = optimism;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, kind: MinimizerKind) -> Result<()> {
        match kind {
            MinimizerKind::Mwu | MinimizerKind::Omwu | MinimizerKind::Exp3 => {
                if !(self.eta.is_finite() && self.eta > 0.0) {
                    return Err(LonrError::InvalidParameter(format!(
                        "learning rate must be positive, got {}",
                        self.eta
                    )));
                }
                if kind == MinimizerKind::Omwu && self.optimism < 2 {
                    return Err(LonrError::InvalidParameter(format!(
                        "optimism count must be at least 2, got {}",
                        self.optimism
                    )));
                }
            }
            MinimizerKind::Dcfr => {
                let finite = [self.dcfr_alpha, self.dcfr_beta, self.dcfr_gamma]
                    .iter()
                    .all(|v| v.is_finite());
                if !finite || self.dcfr_gamma < 0.0 {
                    return Err(LonrError::InvalidParameter(format!(
                        "invalid DCFR parameters ({}, {}, {})",
                        self.dcfr_alpha, self.dcfr_beta, self.dcfr_gamma
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Serializable view of a learner, used for trace inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizerSnapshot {
    pub kind: MinimizerKind,
    pub t: u64,
    pub trackers: Vec<f64>,
    pub policy: Vec<f64>,
    pub policy_sum: Vec<f64>,
    pub weight: f64,
}

/// `r(a) = x(a) - pi . x` for every action.
pub fn instantaneous_regret(rewards: &[f64], policy: &ActionDistribution) -> Vec<f64> {
    let expected = policy.expect(rewards);
    rewards.iter().map(|x| x - expected).collect()
}

/// Average external regret of a played sequence:
/// `(max_i sum_t x_{t,i} - sum_t pi_t . x_t) / (k + 1)`.
pub fn empirical_regret(
    reward_history: &[Vec<f64>],
    policy_history: &[ActionDistribution],
) -> Result<f64> {
    if reward_history.is_empty() {
        return Err(LonrError::EmptyInput("regret of an empty history".into()));
    }
    if reward_history.len() != policy_history.len() {
        return Err(LonrError::DimensionMismatch(format!(
            "{} reward vectors but {} policies",
            reward_history.len(),
            policy_history.len()
        )));
    }
    let mut acc = RegretAccumulator::new(reward_history[0].len());
    for (x, pi) in reward_history.iter().zip(policy_history) {
        if x.len() != acc.num_actions() || pi.num_actions() != acc.num_actions() {
            return Err(LonrError::DimensionMismatch(
                "reward and policy lengths differ across rounds".into(),
            ));
        }
        acc.record(x, pi);
    }
    Ok(acc.average_regret())
}

/// Running totals for [`empirical_regret`] without storing the history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretAccumulator {
    reward_sums: Vec<f64>,
    expected_sum: f64,
    rounds: u64,
}

impl RegretAccumulator {
    pub fn new(num_actions: usize) -> Self {
        Self {
            reward_sums: vec![0.0; num_actions],
            expected_sum: 0.0,
            rounds: 0,
        }
    }

    pub fn num_actions(&self) -> usize {
        self.reward_sums.len()
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn record(&mut self, rewards: &[f64], policy: &ActionDistribution) {
        self.record_expected(rewards, policy.expect(rewards));
    }

    /// Records a round whose expected reward was computed by the caller.
    pub fn record_expected(&mut self, rewards: &[f64], expected: f64) {
        for (sum, x) in self.reward_sums.iter_mut().zip(rewards) {
            *sum += x;
        }
        self.expected_sum += expected;
        self.rounds += 1;
    }

    /// Signed average regret; zero before the first round.
    pub fn average_regret(&self) -> f64 {
        if self.rounds == 0 {
            return 0.0;
        }
        let best = self
            .reward_sums
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        (best - self.expected_sum) / self.rounds as f64
    }

    /// Total (unnormalized) regret of every action.
    pub fn cumulative_regrets(&self) -> Vec<f64> {
        self.reward_sums
            .iter()
            .map(|s| s - self.expected_sum)
            .collect()
    }
}

/// One no-regret learner.
#[derive(Debug, Clone)]
pub struct Minimizer {
    kind: MinimizerKind,
    params: MinimizerParams,
    trackers: Vec<f64>,
    last_rewards: Vec<f64>,
    policy: ActionDistribution,
    policy_sum: Vec<f64>,
    weight: f64,
    t: u64,
    rng: ChaCha8Rng,
}

impl Minimizer {
    pub fn new(kind: MinimizerKind, num_actions: usize, params: MinimizerParams) -> Result<Self> {
        if num_actions == 0 {
            return Err(LonrError::InvalidParameter(
                "a minimizer needs at least one action".into(),
            ));
        }
        params.validate(kind)?;
        Ok(Self {
            kind,
            params,
            trackers: vec![0.0; num_actions],
            last_rewards: vec![0.0; num_actions],
            policy: ActionDistribution::uniform(num_actions),
            policy_sum: vec![0.0; num_actions],
            weight: 0.0,
            t: 0,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
        })
    }

    /// Replaces the uniform round-0 policy; the trackers stay at zero.
    pub fn with_initial_policy(mut self, policy: ActionDistribution) -> Result<Self> {
        if policy.num_actions() != self.num_actions() {
            return Err(LonrError::DimensionMismatch(format!(
                "initial policy over {} actions for a learner with {}",
                policy.num_actions(),
                self.num_actions()
            )));
        }
        self.policy = policy;
        Ok(self)
    }

    pub fn kind(&self) -> MinimizerKind {
        self.kind
    }

    pub fn params(&self) -> &MinimizerParams {
        &self.params
    }

    pub fn num_actions(&self) -> usize {
        self.trackers.len()
    }

    pub fn iteration(&self) -> u64 {
        self.t
    }

    pub fn trackers(&self) -> &[f64] {
        &self.trackers
    }

    pub fn policy_sum(&self) -> &[f64] {
        &self.policy_sum
    }

    /// Total averaging weight applied so far.
    pub fn total_weight(&self) -> f64 {
        self.weight
    }

    pub fn current_policy(&self) -> &ActionDistribution {
        &self.policy
    }

    pub fn average_policy(&self) -> ActionDistribution {
        if self.weight > 0.0 {
            ActionDistribution::from_weights(&self.policy_sum)
        } else {
            ActionDistribution::uniform(self.num_actions())
        }
    }

    pub fn snapshot(&self) -> MinimizerSnapshot {
        MinimizerSnapshot {
            kind: self.kind,
            t: self.t,
            trackers: self.trackers.clone(),
            policy: self.policy.probs().to_vec(),
            policy_sum: self.policy_sum.clone(),
            weight: self.weight,
        }
    }

    /// Feeds one full reward vector and advances the policy.
    ///
    /// Exp3 only looks at the reward of an action it samples from its current
    /// policy with its own seeded generator.
    pub fn observe(&mut self, rewards: &[f64]) -> Result<()> {
        self.check_rewards(rewards)?;
        if self.kind == MinimizerKind::Exp3 {
            let action = self.policy.sample(&mut self.rng);
            return self.observe_bandit(action, rewards[action]);
        }

        let regret = instantaneous_regret(rewards, &self.policy);
        self.t += 1;
        let t = self.t as f64;
        match self.kind {
            MinimizerKind::Rm => {
                for (q, r) in self.trackers.iter_mut().zip(&regret) {
                    *q += r;
                }
            }
            MinimizerKind::RmPlus => {
                for (q, r) in self.trackers.iter_mut().zip(&regret) {
                    *q = (*q + r).max(0.0);
                }
            }
            MinimizerKind::RmPlusPlus => {
                for (q, r) in self.trackers.iter_mut().zip(&regret) {
                    *q += r.max(0.0);
                }
            }
            MinimizerKind::Dcfr => {
                let pos = t.powf(self.params.dcfr_alpha);
                let neg = t.powf(self.params.dcfr_beta);
                let (pos, neg) = (pos / (pos + 1.0), neg / (neg + 1.0));
                for (q, r) in self.trackers.iter_mut().zip(&regret) {
                    *q += r;
                    *q *= if *q > 0.0 { pos } else { neg };
                }
            }
            MinimizerKind::Mwu | MinimizerKind::Omwu => {
                for (q, x) in self.trackers.iter_mut().zip(rewards) {
                    *q += x;
                }
                self.last_rewards.copy_from_slice(rewards);
            }
            MinimizerKind::Exp3 => unreachable!(),
        }
        self.policy = self.next_policy();
        self.accumulate_average();
        Ok(())
    }

    /// Bandit feedback: only `reward` of the played `action` is revealed.
    pub fn observe_bandit(&mut self, action: usize, reward: f64) -> Result<()> {
        if !self.kind.is_bandit() {
            return Err(LonrError::InvalidParameter(format!(
                "{} needs full reward vectors",
                self.kind
            )));
        }
        if action >= self.num_actions() {
            return Err(LonrError::DimensionMismatch(format!(
                "action {action} out of {} actions",
                self.num_actions()
            )));
        }
        if !reward.is_finite() {
            return Err(LonrError::NonFinite(format!("bandit reward {reward}")));
        }
        let prob = self.policy.probs()[action];
        assert!(prob > 0.0, "Exp3 played an action with zero probability");
        self.trackers[action] += reward / prob;
        self.last_rewards.iter_mut().for_each(|x| *x = 0.0);
        self.last_rewards[action] = reward;
        self.t += 1;
        self.policy = self.next_policy();
        self.accumulate_average();
        Ok(())
    }

    fn check_rewards(&self, rewards: &[f64]) -> Result<()> {
        if rewards.len() != self.num_actions() {
            return Err(LonrError::DimensionMismatch(format!(
                "{} rewards for {} actions",
                rewards.len(),
                self.num_actions()
            )));
        }
        if let Some(x) = rewards.iter().find(|x| !x.is_finite()) {
            return Err(LonrError::NonFinite(format!("reward {x}")));
        }
        Ok(())
    }

    fn next_policy(&self) -> ActionDistribution {
        if self.kind.is_regret_matching() {
            let positive: Vec<f64> = self.trackers.iter().map(|q| q.max(0.0)).collect();
            return ActionDistribution::from_weights(&positive);
        }
        let eta = self.params.eta;
        let exponents: Vec<f64> = match self.kind {
            MinimizerKind::Omwu => {
                let extra = f64::from(self.params.optimism) - 1.0;
                self.trackers
                    .iter()
                    .zip(&self.last_rewards)
                    .map(|(s, x)| eta * (s + extra * x))
                    .collect()
            }
            _ => self.trackers.iter().map(|s| eta * s).collect(),
        };
        let softmax = ActionDistribution::from_weights(&softmax_weights(&exponents));
        if self.kind == MinimizerKind::Exp3 {
            softmax.mix_uniform(exp3_exploration(self.num_actions(), self.t))
        } else {
            softmax
        }
    }

    fn accumulate_average(&mut self) {
        let t = self.t as f64;
        let step_weight = match self.kind {
            MinimizerKind::RmPlus => t,
            MinimizerKind::Dcfr => {
                let decay = ((t - 1.0) / t).powf(self.params.dcfr_gamma);
                self.policy_sum.iter_mut().for_each(|p| *p *= decay);
                self.weight *= decay;
                1.0
            }
            _ => 1.0,
        };
        for (sum, p) in self.policy_sum.iter_mut().zip(self.policy.probs()) {
            *sum += step_weight * p;
        }
        self.weight += step_weight;
    }
}

/// Exploration rate `min(1, sqrt(|A| ln|A| / t))`.
pub fn exp3_exploration(num_actions: usize, t: u64) -> f64 {
    if t == 0 {
        return 1.0;
    }
    let n = num_actions as f64;
    (n * n.ln() / t as f64).sqrt().min(1.0)
}

fn softmax_weights(exponents: &[f64]) -> Vec<f64> {
    let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    exponents.iter().map(|e| (e - max).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn fresh_learners_are_uniform() {
        let rm = Minimizer::new(MinimizerKind::Rm, 3, MinimizerParams::default()).unwrap();
        assert!(approx(rm.current_policy().probs(), &[1.0 / 3.0; 3], 1e-15));
        assert!(approx(rm.average_policy().probs(), &[1.0 / 3.0; 3], 1e-15));
        assert_eq!(rm.iteration(), 0);
        assert!(rm.trackers().iter().all(|q| *q == 0.0));

        let mwu = Minimizer::new(
            MinimizerKind::Mwu,
            1,
            MinimizerParams::default().with_eta(0.1),
        )
        .unwrap();
        assert_eq!(mwu.current_policy().probs(), &[1.0]);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let omwu = Minimizer::new(
            MinimizerKind::Omwu,
            2,
            MinimizerParams::default().with_eta(0.1).with_optimism(1),
        );
        assert!(matches!(omwu, Err(LonrError::InvalidParameter(_))));
        let mwu = Minimizer::new(
            MinimizerKind::Mwu,
            2,
            MinimizerParams::default().with_eta(0.0),
        );
        assert!(matches!(mwu, Err(LonrError::InvalidParameter(_))));
        let none = Minimizer::new(MinimizerKind::Rm, 0, MinimizerParams::default());
        assert!(none.is_err());
    }

    #[test]
    fn instantaneous_regret_matches_definition() {
        let half = ActionDistribution::uniform(2);
        assert!(approx(
            &instantaneous_regret(&[1.0, 0.0], &half),
            &[0.5, -0.5],
            0.0
        ));
        let third = ActionDistribution::uniform(3);
        assert!(approx(
            &instantaneous_regret(&[2.5; 3], &third),
            &[0.0; 3],
            1e-15
        ));
        let first = ActionDistribution::point(3, 0);
        assert!(approx(
            &instantaneous_regret(&[3.0, 1.0, 0.0], &first),
            &[0.0, -2.0, -3.0],
            0.0
        ));
    }

    #[test]
    fn rm_plus_plus_clips_instantaneous_regret() {
        let mut m =
            Minimizer::new(MinimizerKind::RmPlusPlus, 2, MinimizerParams::default()).unwrap();
        m.observe(&[1.0, 0.0]).unwrap();
        assert!(approx(m.trackers(), &[0.5, 0.0], 0.0));
        assert!(approx(m.current_policy().probs(), &[1.0, 0.0], 0.0));
    }

    #[test]
    fn rm_plays_only_positive_regret() {
        let mut m = Minimizer::new(MinimizerKind::Rm, 3, MinimizerParams::default()).unwrap();
        m.observe(&[2.0, -1.0, 0.0]).unwrap(); // pi uniform, mean 1/3
        assert!(approx(
            m.trackers(),
            &[5.0 / 3.0, -4.0 / 3.0, -1.0 / 3.0],
            1e-15
        ));
        assert!(approx(m.current_policy().probs(), &[1.0, 0.0, 0.0], 0.0));
        m.observe(&[0.0, 0.0, 1.0 / 3.0]).unwrap();
        assert!(approx(m.trackers(), &[5.0 / 3.0, -4.0 / 3.0, 0.0], 1e-15));
        assert!(approx(m.current_policy().probs(), &[1.0, 0.0, 0.0], 0.0));
    }

    #[test]
    fn all_nonpositive_trackers_give_uniform() {
        for kind in [
            MinimizerKind::Rm,
            MinimizerKind::RmPlus,
            MinimizerKind::Dcfr,
        ] {
            let mut m = Minimizer::new(kind, 2, MinimizerParams::default()).unwrap();
            m.observe(&[1.0, 1.0]).unwrap();
            assert!(
                approx(m.current_policy().probs(), &[0.5, 0.5], 0.0),
                "{kind}"
            );
        }
    }

    #[test]
    fn rm_plus_average_is_linearly_weighted() {
        let mut m = Minimizer::new(MinimizerKind::RmPlus, 2, MinimizerParams::default()).unwrap();
        let mut seen = Vec::new();
        for x in [[1.0, 0.0], [0.0, 3.0], [2.0, 0.5]] {
            m.observe(&x).unwrap();
            seen.push(m.current_policy().probs().to_vec());
        }
        let expected: Vec<f64> = (0..2)
            .map(|a| (seen[0][a] + 2.0 * seen[1][a] + 3.0 * seen[2][a]) / 6.0)
            .collect();
        assert!(approx(m.average_policy().probs(), &expected, 1e-15));
        assert_eq!(m.total_weight(), 6.0);
    }

    #[test]
    fn average_policy_examples() {
        let mut constant =
            Minimizer::new(MinimizerKind::Mwu, 2, MinimizerParams::default()).unwrap();
        for _ in 0..10 {
            constant.observe(&[0.0, 0.0]).unwrap();
        }
        assert!(approx(
            constant.average_policy().probs(),
            constant.current_policy().probs(),
            1e-15
        ));

        // Two near-opposite pure policies with unit weights average to about one half.
        let mut alt =
            Minimizer::new(MinimizerKind::RmPlusPlus, 2, MinimizerParams::default()).unwrap();
        alt.observe(&[1.0, 0.0]).unwrap(); // Q = (0.5, 0), pi = (1, 0)
        alt.observe(&[0.0, 1000.0]).unwrap(); // Q = (0.5, 1000), pi ~ (0, 1)
        let avg = alt.average_policy();
        assert!((avg.probs()[0] - (1.0 + 0.5 / 1000.5) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn dcfr_discounts_positive_and_negative_regret() {
        let mut m = Minimizer::new(MinimizerKind::Dcfr, 2, MinimizerParams::default()).unwrap();
        m.observe(&[1.0, 0.0]).unwrap();
        // t = 1: positive factor 1/(1+1), negative factor 1/(1+1).
        assert!(approx(m.trackers(), &[0.25, -0.25], 1e-15));
        m.observe(&[0.0, 0.0]).unwrap();
        let pos = 2f64.powf(1.5) / (2f64.powf(1.5) + 1.0);
        assert!(approx(m.trackers(), &[0.25 * pos, -0.125], 1e-15));
        // Average weights (t-1/t)^2 compounded: first contribution 1/4 at t = 2.
        assert!((m.total_weight() - 1.25).abs() < 1e-15);
    }

    #[test]
    fn omwu_with_unit_optimism_matches_mwu() {
        // c = 1 is rejected by the constructor, so compare the exponent rule directly.
        let params = MinimizerParams::default().with_eta(0.3);
        let mut mwu = Minimizer::new(MinimizerKind::Mwu, 3, params).unwrap();
        let mut omwu = Minimizer::new(MinimizerKind::Omwu, 3, params.with_optimism(2)).unwrap();
        omwu.params.optimism = 1;
        for x in [[1.0, 0.0, 0.5], [0.2, 0.9, 0.1], [0.0, 0.0, 1.0]] {
            mwu.observe(&x).unwrap();
            omwu.observe(&x).unwrap();
            assert_eq!(mwu.current_policy(), omwu.current_policy());
        }
    }

    #[test]
    fn omwu_counts_last_vector_extra_times() {
        let params = MinimizerParams::default().with_eta(1.0).with_optimism(3);
        let mut m = Minimizer::new(MinimizerKind::Omwu, 2, params).unwrap();
        m.observe(&[1.0, 0.0]).unwrap();
        // exponent = 1 * (1 + 2*1, 0) = (3, 0)
        let e3 = 3f64.exp();
        assert!(approx(
            m.current_policy().probs(),
            &[e3 / (e3 + 1.0), 1.0 / (e3 + 1.0)],
            1e-15
        ));
        assert_eq!(m.trackers(), &[1.0, 0.0]);
    }

    #[test]
    fn exp3_importance_weights_sampled_action() {
        let mut m = Minimizer::new(MinimizerKind::Exp3, 2, MinimizerParams::default()).unwrap();
        m.observe_bandit(0, 1.0).unwrap();
        assert!(approx(m.trackers(), &[2.0, 0.0], 0.0));
        // t = 1 with two actions explores fully.
        assert!(approx(m.current_policy().probs(), &[0.5, 0.5], 1e-15));
        assert!(m.observe_bandit(5, 1.0).is_err());
        let mut rm = Minimizer::new(MinimizerKind::Rm, 2, MinimizerParams::default()).unwrap();
        assert!(rm.observe_bandit(0, 1.0).is_err());
    }

    #[test]
    fn exp3_full_vector_path_is_seeded() {
        let params = MinimizerParams::default().with_seed(42);
        let mut a = Minimizer::new(MinimizerKind::Exp3, 3, params).unwrap();
        let mut b = Minimizer::new(MinimizerKind::Exp3, 3, params).unwrap();
        for i in 0..200 {
            let x = [(i % 3) as f64, 1.0, 0.5];
            a.observe(&x).unwrap();
            b.observe(&x).unwrap();
        }
        assert_eq!(a.snapshot(), b.snapshot());
    }

    #[test]
    fn rejects_bad_rewards() {
        let mut m = Minimizer::new(MinimizerKind::Rm, 2, MinimizerParams::default()).unwrap();
        assert!(matches!(
            m.observe(&[1.0]),
            Err(LonrError::DimensionMismatch(_))
        ));
        assert!(matches!(
            m.observe(&[f64::NAN, 0.0]),
            Err(LonrError::NonFinite(_))
        ));
        assert_eq!(m.iteration(), 0);
    }

    #[test]
    fn empirical_regret_examples() {
        let best = empirical_regret(
            &[vec![1.0, 0.0], vec![2.0, 1.0]],
            &[
                ActionDistribution::point(2, 0),
                ActionDistribution::point(2, 0),
            ],
        )
        .unwrap();
        assert_eq!(best, 0.0);
        let one = empirical_regret(&[vec![1.0, 0.0]], &[ActionDistribution::uniform(2)]).unwrap();
        assert_eq!(one, 0.5);
        assert!(matches!(
            empirical_regret(&[], &[]),
            Err(LonrError::EmptyInput(_))
        ));
    }

    #[test]
    fn snapshot_serializes_with_documented_fields() {
        let mut m =
            Minimizer::new(MinimizerKind::RmPlusPlus, 2, MinimizerParams::default()).unwrap();
        m.observe(&[1.0, 0.0]).unwrap();
        let json = serde_json::to_value(m.snapshot()).unwrap();
        assert_eq!(json["kind"], "RM++");
        assert_eq!(json["t"], 1);
        assert_eq!(json["trackers"], serde_json::json!([0.5, 0.0]));
        assert_eq!(json["policy"], serde_json::json!([1.0, 0.0]));
        assert_eq!(json["policy_sum"], serde_json::json!([1.0, 0.0]));
        assert_eq!(json["weight"], 1.0);
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in MinimizerKind::FULL_INFORMATION
            .iter()
            .chain([&MinimizerKind::Exp3])
        {
            assert_eq!(kind.name().parse::<MinimizerKind>().unwrap(), *kind);
        }
    }
}
