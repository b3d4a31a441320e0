use serde::{Deserialize, Serialize};

/// Per-iteration record for the bootstrap-sampling discrepancy.
///
/// At iteration `t` it stores which states were updated and, for every state
/// `x`, the pre-update expected value `pi_t(x) . Q_t(x)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct XiTrace {
    pub updated: Vec<Vec<usize>>,
    pub values: Vec<Vec<f64>>,
}

impl XiTrace {
    pub fn record(&mut self, updated: Vec<usize>, values: Vec<f64>) {
        self.updated.push(updated);
        self.values.push(values);
    }

    pub fn len(&self) -> usize {
        self.updated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.updated.is_empty()
    }

    pub fn num_states(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn update_count(&self, state: usize) -> usize {
        self.updated.iter().filter(|u| u.contains(&state)).count()
    }
}

/// `xi_{s s'}(k)`: the mean of `s'`'s expected value seen at `s`'s first `k`
/// updates, minus the mean of `s'`'s expected value over its own updates up
/// to and including iteration `t_k`.
///
/// `None` when `s` has fewer than `k` updates, `k == 0`, or `s'` was never
/// updated by `t_k`.
pub fn xi_at(trace: &XiTrace, s: usize, s_next: usize, k: usize) -> Option<f64> {
    if k == 0 {
        return None;
    }
    let mut seen = 0usize;
    let mut seen_sum = 0.0;
    let mut own = 0usize;
    let mut own_sum = 0.0;
    for (updated, values) in trace.updated.iter().zip(&trace.values) {
        if updated.contains(&s_next) {
            own += 1;
            own_sum += values[s_next];
        }
        if updated.contains(&s) {
            seen += 1;
            seen_sum += values[s_next];
            if seen == k {
                return (own > 0).then(|| seen_sum / k as f64 - own_sum / own as f64);
            }
        }
    }
    None
}

/// `xi_{s s'}` for every ordered pair, each at `s`'s final update count.
pub fn xi_diagnostic(trace: &XiTrace) -> Vec<Vec<Option<f64>>> {
    let n = trace.num_states();
    (0..n)
        .map(|s| {
            let k = trace.update_count(s);
            (0..n).map(|s_next| xi_at(trace, s, s_next, k)).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synchronous_trace_is_zero() {
        let mut trace = XiTrace::default();
        for t in 0..50 {
            let v = vec![(t as f64).sin(), (t as f64 * 0.3).cos(), t as f64];
            trace.record(vec![0, 1, 2], v);
        }
        for row in xi_diagnostic(&trace) {
            for x in row {
                assert_eq!(x, Some(0.0));
            }
        }
    }

    #[test]
    fn single_state_is_zero() {
        let mut trace = XiTrace::default();
        for t in 0..10 {
            trace.record(vec![0], vec![t as f64 * 1.5]);
        }
        assert_eq!(xi_diagnostic(&trace), vec![vec![Some(0.0)]]);
    }

    #[test]
    fn hand_computed_asynchronous_entry() {
        // Updates: t0 -> s0, t1 -> s1, t2 -> s0.
        let mut trace = XiTrace::default();
        trace.record(vec![0], vec![0.0, 10.0]);
        trace.record(vec![1], vec![1.0, 20.0]);
        trace.record(vec![0], vec![2.0, 40.0]);
        // s0 saw s1's values 10 and 40; s1's own update at t1 saw 20.
        assert_eq!(xi_at(&trace, 0, 1, 2), Some(25.0 - 20.0));
        // Before t0, s1 had no update of its own.
        assert_eq!(xi_at(&trace, 0, 1, 1), None);
        assert_eq!(xi_at(&trace, 0, 1, 3), None);
        assert_eq!(xi_at(&trace, 0, 1, 0), None);
    }
}
