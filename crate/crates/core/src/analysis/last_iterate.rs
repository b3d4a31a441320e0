use serde::{Deserialize, Serialize};

use crate::error::{LonrError, Result};
use crate::minimizers::ActionDistribution;

/// Per-action statistics of the current iterate over a trailing window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LastIterateReport {
    pub window: usize,
    pub mean: Vec<f64>,
    /// `max - min` of each action's probability over the window.
    pub amplitude: Vec<f64>,
}

impl LastIterateReport {
    pub fn max_amplitude(&self) -> f64 {
        self.amplitude.iter().copied().fold(0.0, f64::max)
    }

    pub fn converged(&self, threshold: f64) -> bool {
        self.max_amplitude() <= threshold
    }
}

/// Mean and amplitude over the last `window` entries of a policy trace.
pub fn last_iterate_report(trace: &[Vec<f64>], window: usize) -> Result<LastIterateReport> {
    if window == 0 {
        return Err(LonrError::InvalidParameter(
            "window must be positive".into(),
        ));
    }
    if window > trace.len() {
        return Err(LonrError::InvalidParameter(format!(
            "window {window} exceeds trace length {}",
            trace.len()
        )));
    }
    let tail = &trace[trace.len() - window..];
    let n = tail[0].len();
    if tail.iter().any(|p| p.len() != n) {
        return Err(LonrError::DimensionMismatch("ragged policy trace".into()));
    }
    let mut mean = vec![0.0; n];
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for p in tail {
        for a in 0..n {
            mean[a] += p[a];
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    mean.iter_mut().for_each(|m| *m /= window as f64);
    let amplitude = hi.iter().zip(&lo).map(|(h, l)| h - l).collect();
    Ok(LastIterateReport {
        window,
        mean,
        amplitude,
    })
}

/// `max_s |pi(s) . Qbar(s) - max_a Qbar(s, a)|`.
pub fn last_iterate_value_gap(policy: &[ActionDistribution], q_avg: &[Vec<f64>]) -> Result<f64> {
    if policy.len() != q_avg.len()
        || policy
            .iter()
            .zip(q_avg)
            .any(|(p, q)| p.num_actions() != q.len())
    {
        return Err(LonrError::DimensionMismatch(
            "policy and Q table shapes differ".into(),
        ));
    }
    Ok(policy
        .iter()
        .zip(q_avg)
        .map(|(p, q)| {
            let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (p.expect(q) - best).abs()
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_trace_has_no_amplitude() {
        let trace = vec![vec![0.3, 0.7]; 20];
        let report = last_iterate_report(&trace, 10).unwrap();
        assert_eq!(report.max_amplitude(), 0.0);
        assert!((report.mean[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn alternating_trace_has_unit_amplitude() {
        let trace: Vec<Vec<f64>> = (0..10)
            .map(|t| {
                if t % 2 == 0 {
                    vec![1.0, 0.0]
                } else {
                    vec![0.0, 1.0]
                }
            })
            .collect();
        let report = last_iterate_report(&trace, 4).unwrap();
        assert_eq!(report.amplitude, vec![1.0, 1.0]);
        assert_eq!(report.mean, vec![0.5, 0.5]);
        assert!(last_iterate_report(&trace, 11).is_err());
    }

    #[test]
    fn value_gap_examples() {
        let q = vec![vec![1.0, 0.0]];
        assert_eq!(
            last_iterate_value_gap(&[ActionDistribution::point(2, 0)], &q).unwrap(),
            0.0
        );
        assert_eq!(
            last_iterate_value_gap(&[ActionDistribution::uniform(2)], &q).unwrap(),
            0.5
        );
        assert!(last_iterate_value_gap(&[ActionDistribution::uniform(3)], &q).is_err());
    }
}
