use serde::{Deserialize, Serialize};

use crate::analysis::Table;

/// Q values with their running averages.
///
/// Every entry keeps two sums over its own updates: the inclusive one over
/// the values written (`Q_1..Q_k`) and the exclusive one over the values
/// replaced (`Q_0..Q_{k-1}`). An entry never written reports its initial value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    values: Table,
    initial: Table,
    sum_inclusive: Table,
    sum_exclusive: Table,
    entry_counts: Vec<Vec<u64>>,
    counts: Vec<u64>,
    /// Per state, the sum of `pi_t(s) . Q_t(s)` over the full-row backups of `s`.
    expected_value_sums: Vec<f64>,
}

impl QTable {
    pub fn new(actions_per_state: &[usize], initial_value: f64) -> Self {
        let initial: Table = actions_per_state
            .iter()
            .map(|n| vec![initial_value; *n])
            .collect();
        let zeros: Table = actions_per_state.iter().map(|n| vec![0.0; *n]).collect();
        Self {
            values: initial.clone(),
            initial,
            sum_inclusive: zeros.clone(),
            sum_exclusive: zeros,
            entry_counts: actions_per_state.iter().map(|n| vec![0; *n]).collect(),
            counts: vec![0; actions_per_state.len()],
            expected_value_sums: vec![0.0; actions_per_state.len()],
        }
    }

    pub fn num_states(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &Table {
        &self.values
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state]
    }

    pub fn initial(&self) -> &Table {
        &self.initial
    }

    /// Number of updates `k(s)` each state has received.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn entry_counts(&self) -> &[Vec<u64>] {
        &self.entry_counts
    }

    pub fn expected_value_sums(&self) -> &[f64] {
        &self.expected_value_sums
    }

    /// `Qbar`: mean of the values written, `Q_1..Q_k`.
    pub fn avg_inclusive(&self) -> Table {
        self.average(&self.sum_inclusive)
    }

    /// `Qunder`: mean of the values replaced, `Q_0..Q_{k-1}`.
    pub fn avg_exclusive(&self) -> Table {
        self.average(&self.sum_exclusive)
    }

    fn average(&self, sums: &Table) -> Table {
        sums.iter()
            .zip(&self.entry_counts)
            .zip(&self.initial)
            .map(|((row, counts), init)| {
                row.iter()
                    .zip(counts)
                    .zip(init)
                    .map(|((sum, k), q0)| if *k == 0 { *q0 } else { sum / *k as f64 })
                    .collect()
            })
            .collect()
    }

    /// Replaces the whole row of `state`.
    pub fn set_row(&mut self, state: usize, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.values[state].len());
        for a in 0..row.len() {
            self.sum_exclusive[state][a] += self.values[state][a];
            self.sum_inclusive[state][a] += row[a];
            self.entry_counts[state][a] += 1;
        }
        self.values[state] = row;
        self.counts[state] += 1;
    }

    /// Replaces a single entry, leaving the rest of the row and its averages alone.
    pub fn set_entry(&mut self, state: usize, action: usize, value: f64) {
        self.sum_exclusive[state][action] += self.values[state][action];
        self.sum_inclusive[state][action] += value;
        self.entry_counts[state][action] += 1;
        self.values[state][action] = value;
        self.counts[state] += 1;
    }

    pub(crate) fn add_expected_value(&mut self, state: usize, value: f64) {
        self.expected_value_sums[state] += value;
    }
}
