use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MarkovGameSpec, MdpSpec};
use crate::error::{LonrError, Result};

pub const KEEP: usize = 0;
pub const SEND: usize = 1;

/// The two-state, two-player game with no stationary deterministic equilibrium.
///
/// State 0 belongs to player 0 and state 1 to player 1; each controller picks
/// KEEP (stay) or SEND (hand the token to the other state) while the other
/// player has a single dummy action.
pub fn make_nosde(discount: f64) -> Result<MarkovGameSpec> {
    if !(discount > 0.0 && discount < 1.0) {
        return Err(LonrError::InvalidParameter(format!(
            "NoSDE discount must lie in (0, 1), got {discount}"
        )));
    }
    let stay = |s: usize| {
        if s == 0 {
            vec![1.0, 0.0]
        } else {
            vec![0.0, 1.0]
        }
    };
    let other = |s: usize| stay(1 - s);
    // rewards[s][controller action] = (player 0, player 1)
    let rewards = vec![
        vec![vec![1.0, 0.0], vec![0.0, 3.0]],
        vec![vec![3.0, 1.0], vec![0.0, 0.0]],
    ];
    MarkovGameSpec::new(
        2,
        vec![vec![2, 1], vec![1, 2]],
        vec![Some(0), Some(1)],
        vec![vec![stay(0), other(0)], vec![stay(1), other(1)]],
        rewards,
        discount,
        vec![false, false],
        false,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAction {
    North = 0,
    South = 1,
    East = 2,
    West = 3,
}

impl GridAction {
    pub const ALL: [GridAction; 4] = [
        GridAction::North,
        GridAction::South,
        GridAction::East,
        GridAction::West,
    ];

    fn delta(self) -> (isize, isize) {
        match self {
            GridAction::North => (-1, 0),
            GridAction::South => (1, 0),
            GridAction::East => (0, 1),
            GridAction::West => (0, -1),
        }
    }
}

/// Geometry of the cliff-walking grid. Row 0 is the top row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CliffGrid {
    pub rows: usize,
    pub cols: usize,
}

impl CliffGrid {
    pub const STEP_REWARD: f64 = -1.0;
    pub const CLIFF_REWARD: f64 = -100.0;

    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        // Start, goal and at least one cliff cell must fit in the bottom row.
        if rows < 2 || cols < 3 {
            return Err(LonrError::InvalidParameter(format!(
                "a {rows}x{cols} grid cannot hold a start, a goal and a cliff"
            )));
        }
        Ok(Self { rows, cols })
    }

    pub fn state(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn position(&self, state: usize) -> (usize, usize) {
        (state / self.cols, state % self.cols)
    }

    pub fn start(&self) -> usize {
        self.state(self.rows - 1, 0)
    }

    pub fn goal(&self) -> usize {
        self.state(self.rows - 1, self.cols - 1)
    }

    pub fn is_cliff(&self, state: usize) -> bool {
        let (row, col) = self.position(state);
        row == self.rows - 1 && col > 0 && col < self.cols - 1
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        state == self.goal() || self.is_cliff(state)
    }

    pub fn num_states(&self) -> usize {
        self.rows * self.cols
    }

    /// Deterministic successor; moves off the edge leave the position unchanged.
    pub fn step(&self, state: usize, action: GridAction) -> usize {
        let (row, col) = self.position(state);
        let (dr, dc) = action.delta();
        let r = row as isize + dr;
        let c = col as isize + dc;
        if r < 0 || c < 0 || r >= self.rows as isize || c >= self.cols as isize {
            state
        } else {
            self.state(r as usize, c as usize)
        }
    }

    pub fn mdp(&self) -> MdpSpec {
        let n = self.num_states();
        let mut transition = Vec::with_capacity(n);
        let mut reward = Vec::with_capacity(n);
        for s in 0..n {
            if self.is_terminal(s) {
                transition.push(vec![unit(n, s)]);
                reward.push(vec![0.0]);
                continue;
            }
            let mut rows = Vec::with_capacity(4);
            let mut rs = Vec::with_capacity(4);
            for action in GridAction::ALL {
                let next = self.step(s, action);
                rows.push(unit(n, next));
                rs.push(if self.is_cliff(next) {
                    Self::CLIFF_REWARD
                } else {
                    Self::STEP_REWARD
                });
            }
            transition.push(rows);
            reward.push(rs);
        }
        let terminal = (0..n).map(|s| self.is_terminal(s)).collect();
        MdpSpec::new(transition, reward, 1.0, terminal)
            .and_then(|m| m.with_start_states(vec![self.start()]))
            .expect("cliff grid construction is always valid")
    }
}

/// Undiscounted cliff walk: bottom-left start, bottom-right goal, cliff in between.
pub fn make_cliff_grid(rows: usize, cols: usize) -> Result<MdpSpec> {
    Ok(CliffGrid::new(rows, cols)?.mdp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoccerAction {
    North = 0,
    South = 1,
    East = 2,
    West = 3,
    Stick = 4,
}

impl SoccerAction {
    pub const ALL: [SoccerAction; 5] = [
        SoccerAction::North,
        SoccerAction::South,
        SoccerAction::East,
        SoccerAction::West,
        SoccerAction::Stick,
    ];

    fn delta(self) -> (i32, i32) {
        match self {
            SoccerAction::North => (-1, 0),
            SoccerAction::South => (1, 0),
            SoccerAction::East => (0, 1),
            SoccerAction::West => (0, -1),
            SoccerAction::Stick => (0, 0),
        }
    }
}

/// State encoding for the 2x4 soccer field.
///
/// Players stand in the 2x2 middle (columns 1 and 2). Player 0 scores by
/// carrying the ball into column 3, player 1 into column 0; carrying it into
/// the other column is an own goal. Non-terminal state index is
/// `(cell_a * 4 + cell_b) * 2 + owner` compressed over `cell_a != cell_b`,
/// followed by a single absorbing terminal.
#[derive(Debug, Clone, Copy, Default)]
pub struct SoccerLayout;

/// A middle cell as `(row, col)` with `col` in `{1, 2}`.
pub type Cell = (i32, i32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoccerOutcome {
    Play { cells: [Cell; 2], owner: usize },
    Goal { scorer: usize },
}

impl SoccerLayout {
    pub const GOAL_REWARD: f64 = 100.0;
    pub const NUM_PLAY_STATES: usize = 24;
    pub const TERMINAL: usize = 24;

    pub fn cell(index: usize) -> Cell {
        ((index / 2) as i32, (index % 2) as i32 + 1)
    }

    fn cell_index(cell: Cell) -> usize {
        (cell.0 * 2 + cell.1 - 1) as usize
    }

    pub fn encode(cells: [Cell; 2], owner: usize) -> usize {
        let a = Self::cell_index(cells[0]);
        let b = Self::cell_index(cells[1]);
        debug_assert_ne!(a, b);
        let b_rank = if b > a { b - 1 } else { b };
        (a * 3 + b_rank) * 2 + owner
    }

    pub fn decode(state: usize) -> ([Cell; 2], usize) {
        let owner = state % 2;
        let pair = state / 2;
        let a = pair / 3;
        let b_rank = pair % 3;
        let b = if b_rank >= a { b_rank + 1 } else { b_rank };
        ([Self::cell(a), Self::cell(b)], owner)
    }

    fn attack_column(player: usize) -> i32 {
        if player == 0 {
            3
        } else {
            0
        }
    }

    /// Executes both moves, `first` moving first.
    pub fn resolve(
        cells: [Cell; 2],
        owner: usize,
        actions: [SoccerAction; 2],
        first: usize,
    ) -> SoccerOutcome {
        let mut cells = cells;
        let mut owner = owner;
        for mover in [first, 1 - first] {
            let other = 1 - mover;
            let (dr, dc) = actions[mover].delta();
            if (dr, dc) == (0, 0) {
                continue;
            }
            let target = (cells[mover].0 + dr, cells[mover].1 + dc);
            if !(0..=1).contains(&target.0) {
                continue;
            }
            if target.1 == 0 || target.1 == 3 {
                if owner == mover {
                    let scorer = if target.1 == Self::attack_column(mover) {
                        mover
                    } else {
                        other
                    };
                    return SoccerOutcome::Goal { scorer };
                }
                continue;
            }
            if target == cells[other] {
                // The move is cancelled and the stationary player keeps or gains the ball.
                owner = other;
                continue;
            }
            cells[mover] = target;
        }
        SoccerOutcome::Play { cells, owner }
    }
}

/// Two-player zero-sum soccer on a 2x4 field with a randomized move order.
pub fn make_soccer() -> MarkovGameSpec {
    let n = SoccerLayout::NUM_PLAY_STATES + 1;
    let joint = SoccerAction::ALL.len() * SoccerAction::ALL.len();
    let mut transition = Vec::with_capacity(n);
    let mut rewards = Vec::with_capacity(n);
    for s in 0..SoccerLayout::NUM_PLAY_STATES {
        let (cells, owner) = SoccerLayout::decode(s);
        let mut rows = Vec::with_capacity(joint);
        let mut rs = Vec::with_capacity(joint);
        for a0 in SoccerAction::ALL {
            for a1 in SoccerAction::ALL {
                let mut row = vec![0.0; n];
                let mut r = vec![0.0, 0.0];
                for first in 0..2 {
                    match SoccerLayout::resolve(cells, owner, [a0, a1], first) {
                        SoccerOutcome::Play { cells, owner } => {
                            row[SoccerLayout::encode(cells, owner)] += 0.5;
                        }
                        SoccerOutcome::Goal { scorer } => {
                            row[SoccerLayout::TERMINAL] += 0.5;
                            r[scorer] += 0.5 * SoccerLayout::GOAL_REWARD;
                            r[1 - scorer] -= 0.5 * SoccerLayout::GOAL_REWARD;
                        }
                    }
                }
                rows.push(row);
                rs.push(r);
            }
        }
        transition.push(rows);
        rewards.push(rs);
    }
    transition.push(vec![unit(n, SoccerLayout::TERMINAL)]);
    rewards.push(vec![vec![0.0, 0.0]]);

    let mut action_sets = vec![vec![5, 5]; SoccerLayout::NUM_PLAY_STATES];
    action_sets.push(vec![1, 1]);
    let mut terminal = vec![false; SoccerLayout::NUM_PLAY_STATES];
    terminal.push(true);
    MarkovGameSpec::new(
        2,
        action_sets,
        vec![None; n],
        transition,
        rewards,
        0.9,
        terminal,
        true,
    )
    .and_then(|g| g.with_start_states((0..SoccerLayout::NUM_PLAY_STATES).collect()))
    .expect("soccer construction is always valid")
}

/// Single-state two-player game with a self-loop; discount defaults to 0.
///
/// `payoffs[n][i][j]` is player `n`'s reward when player 0 plays `i` and player 1 plays `j`.
pub fn make_matrix_game(payoffs: [Vec<Vec<f64>>; 2]) -> Result<MarkovGameSpec> {
    let rows = payoffs[0].len();
    let cols = payoffs[0].first().map_or(0, Vec::len);
    let shape_ok = rows > 0
        && cols > 0
        && payoffs
            .iter()
            .all(|m| m.len() == rows && m.iter().all(|r| r.len() == cols));
    if !shape_ok {
        return Err(LonrError::DimensionMismatch(
            "payoff matrices must be non-empty and share one shape".into(),
        ));
    }
    let mut rewards = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            rewards.push(vec![payoffs[0][i][j], payoffs[1][i][j]]);
        }
    }
    let zero_sum = rewards
        .iter()
        .all(|r| (r[0] + r[1]).abs() <= super::ROW_SUM_TOL);
    MarkovGameSpec::new(
        2,
        vec![vec![rows, cols]],
        vec![None],
        vec![vec![vec![1.0]; rows * cols]],
        vec![rewards],
        0.0,
        vec![false],
        zero_sum,
    )
}

/// Seeded random MDP: Dirichlet(1) transition rows, rewards uniform in `[0, 1)`.
pub fn make_random_mdp(
    seed: u64,
    num_states: usize,
    num_actions: usize,
    discount: f64,
) -> Result<MdpSpec> {
    if num_states == 0 || num_actions == 0 {
        return Err(LonrError::InvalidParameter(
            "sizes must be at least 1".into(),
        ));
    }
    if !(discount > 0.0 && discount < 1.0) {
        return Err(LonrError::InvalidParameter(format!(
            "random MDP discount must lie in (0, 1), got {discount}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transition = Vec::with_capacity(num_states);
    let mut reward = Vec::with_capacity(num_states);
    for _ in 0..num_states {
        let rows = (0..num_actions)
            .map(|_| dirichlet_row(&mut rng, num_states))
            .collect();
        let rs = (0..num_actions).map(|_| rng.random::<f64>()).collect();
        transition.push(rows);
        reward.push(rs);
    }
    MdpSpec::new(transition, reward, discount, vec![false; num_states])
}

/// Seeded random two-player game with joint actions in every state.
///
/// Rewards are uniform in `[0, 1)`, or `(u, -u)` with `u` uniform in `[-1, 1)` when `zero_sum`.
pub fn make_random_game(
    seed: u64,
    num_states: usize,
    actions: [usize; 2],
    discount: f64,
    zero_sum: bool,
) -> Result<MarkovGameSpec> {
    if num_states == 0 || actions.contains(&0) {
        return Err(LonrError::InvalidParameter(
            "sizes must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let joint = actions[0] * actions[1];
    let mut transition = Vec::with_capacity(num_states);
    let mut rewards = Vec::with_capacity(num_states);
    for _ in 0..num_states {
        transition.push(
            (0..joint)
                .map(|_| dirichlet_row(&mut rng, num_states))
                .collect(),
        );
        rewards.push(
            (0..joint)
                .map(|_| {
                    if zero_sum {
                        let u = 2.0 * rng.random::<f64>() - 1.0;
                        vec![u, -u]
                    } else {
                        vec![rng.random::<f64>(), rng.random::<f64>()]
                    }
                })
                .collect(),
        );
    }
    MarkovGameSpec::new(
        2,
        vec![actions.to_vec(); num_states],
        vec![None; num_states],
        transition,
        rewards,
        discount,
        vec![false; num_states],
        zero_sum,
    )
}

fn dirichlet_row<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    // Exponential draws normalized to the simplex; 1 - u keeps the log argument positive.
    let draws: Vec<f64> = (0..len)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = draws.iter().sum();
    let mut row: Vec<f64> = draws.iter().map(|d| d / total).collect();
    // Push the rounding residue into the largest entry so the row sums to 1.
    let residue = 1.0 - row.iter().sum::<f64>();
    let largest = (0..len)
        .max_by(|a, b| row[*a].total_cmp(&row[*b]))
        .unwrap_or(0);
    row[largest] += residue;
    row
}

fn unit(len: usize, index: usize) -> Vec<f64> {
    let mut row = vec![0.0; len];
    row[index] = 1.0;
    row
}
