//! Bimatrix games with exact payoffs, and iterated dominance reduction.

use num_traits::Zero;
use thiserror::Error;

use crate::posg::Player;
use crate::rational::Q;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalFormError {
    #[error("payoff matrices are empty or not rectangular")]
    Shape,
    #[error("payoff matrices differ in shape")]
    ShapeMismatch,
    #[error("matrices are not negatives of each other at ({0}, {1})")]
    NotZeroSum(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame {
    payoffs: [Vec<Vec<Q>>; 2],
    zero_sum: bool,
    row_labels: Vec<u64>,
    col_labels: Vec<u64>,
}

impl NormalFormGame {
    /// General-sum game. Labels default to `0..rows` / `0..cols`.
    pub fn new(v1: Vec<Vec<Q>>, v2: Vec<Vec<Q>>) -> Result<Self, NormalFormError> {
        let shape = |m: &Vec<Vec<Q>>| -> Result<(usize, usize), NormalFormError> {
            let cols = m.first().map(Vec::len).unwrap_or(0);
            if m.is_empty() || cols == 0 || m.iter().any(|r| r.len() != cols) {
                return Err(NormalFormError::Shape);
            }
            Ok((m.len(), cols))
        };
        let (rows, cols) = shape(&v1)?;
        if shape(&v2)? != (rows, cols) {
            return Err(NormalFormError::ShapeMismatch);
        }
        Ok(NormalFormGame {
            payoffs: [v1, v2],
            zero_sum: false,
            row_labels: (0..rows as u64).collect(),
            col_labels: (0..cols as u64).collect(),
        })
    }

    /// Zero-sum game from the row player's payoffs.
    pub fn zero_sum(v1: Vec<Vec<Q>>) -> Result<Self, NormalFormError> {
        let v2 = v1.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
        NormalFormGame::new(v1, v2)?.into_zero_sum()
    }

    /// Sets the zero-sum flag after checking `V_1 = -V_2`.
    pub fn into_zero_sum(mut self) -> Result<Self, NormalFormError> {
        let (rows, cols) = self.dims();
        for r in 0..rows {
            for c in 0..cols {
                if !(&self.payoffs[0][r][c] + &self.payoffs[1][r][c]).is_zero() {
                    return Err(NormalFormError::NotZeroSum(r, c));
                }
            }
        }
        self.zero_sum = true;
        Ok(self)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> [Q; 2]) -> Self {
        let mut v1 = vec![Vec::with_capacity(cols); rows];
        let mut v2 = vec![Vec::with_capacity(cols); rows];
        for r in 0..rows {
            for c in 0..cols {
                let [a, b] = f(r, c);
                v1[r].push(a);
                v2[r].push(b);
            }
        }
        NormalFormGame::new(v1, v2).expect("from_fn builds rectangular matrices")
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.payoffs[0].len(), self.payoffs[0][0].len())
    }

    pub fn is_zero_sum(&self) -> bool {
        self.zero_sum
    }

    pub fn payoff(&self, player: Player, row: usize, col: usize) -> &Q {
        &self.payoffs[player.index()][row][col]
    }

    pub fn matrix(&self, player: Player) -> &[Vec<Q>] {
        &self.payoffs[player.index()]
    }

    pub fn row_labels(&self) -> &[u64] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[u64] {
        &self.col_labels
    }

    pub fn labels(&self, player: Player) -> &[u64] {
        match player {
            Player::One => &self.row_labels,
            Player::Two => &self.col_labels,
        }
    }

    pub fn set_labels(&mut self, rows: Vec<u64>, cols: Vec<u64>) {
        assert_eq!(rows.len(), self.dims().0);
        assert_eq!(cols.len(), self.dims().1);
        self.row_labels = rows;
        self.col_labels = cols;
    }

    /// Subgame on the given row and column indices (labels follow).
    pub fn restrict(&self, rows: &[usize], cols: &[usize]) -> NormalFormGame {
        let pick = |m: &Vec<Vec<Q>>| -> Vec<Vec<Q>> {
            rows.iter()
                .map(|&r| cols.iter().map(|&c| m[r][c].clone()).collect())
                .collect()
        };
        NormalFormGame {
            payoffs: [pick(&self.payoffs[0]), pick(&self.payoffs[1])],
            zero_sum: self.zero_sum,
            row_labels: rows.iter().map(|&r| self.row_labels[r]).collect(),
            col_labels: cols.iter().map(|&c| self.col_labels[c]).collect(),
        }
    }

    /// The game seen from player 2's side: rows and columns (and players) swapped.
    pub fn transposed(&self) -> NormalFormGame {
        let (rows, cols) = self.dims();
        let t = |m: &Vec<Vec<Q>>| -> Vec<Vec<Q>> {
            (0..cols).map(|c| (0..rows).map(|r| m[r][c].clone()).collect()).collect()
        };
        NormalFormGame {
            payoffs: [t(&self.payoffs[1]), t(&self.payoffs[0])],
            zero_sum: self.zero_sum,
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
        }
    }

    /// Payoff vector of one strategy of `player` against each opponent strategy.
    fn strategy_payoffs(&self, player: Player, idx: usize, opponents: &[usize]) -> Vec<&Q> {
        match player {
            Player::One => opponents.iter().map(|&c| &self.payoffs[0][idx][c]).collect(),
            Player::Two => opponents.iter().map(|&r| &self.payoffs[1][r][idx]).collect(),
        }
    }
}

/// Which pure-strategy dominance relation a reduction removes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    /// Strictly worse against every surviving opponent strategy.
    Strict,
    /// Never better and somewhere worse.
    Weak,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub game: NormalFormGame,
    /// Surviving original indices, per player, ascending.
    pub survivors: [Vec<usize>; 2],
}

/// Iterated elimination of strategies strictly dominated by a pure strategy.
pub fn reduce_strictly_dominated(nfg: &NormalFormGame) -> Reduction {
    reduce_dominated(nfg, Dominance::Strict)
}

/// Iterated elimination of pure-dominated strategies. Each round removes,
/// for both players at once, every strategy dominated by a surviving pure
/// strategy, until nothing changes. Payoff-identical strategies never
/// dominate one another.
pub fn reduce_dominated(nfg: &NormalFormGame, kind: Dominance) -> Reduction {
    let (rows, cols) = nfg.dims();
    let mut alive = [(0..rows).collect::<Vec<_>>(), (0..cols).collect::<Vec<_>>()];
    loop {
        let mut changed = false;
        let mut next = alive.clone();
        for player in Player::BOTH {
            let own = &alive[player.index()];
            let opp = &alive[player.other().index()];
            let vectors: Vec<Vec<&Q>> = own
                .iter()
                .map(|&s| nfg.strategy_payoffs(player, s, opp))
                .collect();
            let dominated = |i: usize| {
                (0..own.len()).any(|j| j != i && dominates(&vectors[j], &vectors[i], kind))
            };
            let keep: Vec<usize> = (0..own.len())
                .filter(|&i| !dominated(i))
                .map(|i| own[i])
                .collect();
            if keep.len() != own.len() {
                changed = true;
            }
            next[player.index()] = keep;
        }
        alive = next;
        if !changed {
            break;
        }
    }
    Reduction {
        game: nfg.restrict(&alive[0], &alive[1]),
        survivors: alive,
    }
}

fn dominates(better: &[&Q], worse: &[&Q], kind: Dominance) -> bool {
    match kind {
        Dominance::Strict => better.iter().zip(worse).all(|(b, w)| b > w),
        Dominance::Weak => {
            better.iter().zip(worse).all(|(b, w)| b >= w)
                && better.iter().zip(worse).any(|(b, w)| b > w)
        }
    }
}
