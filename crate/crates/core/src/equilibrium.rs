//! Exact equilibrium computation and certification.
//!
//! Zero-sum games are solved by exact linear programming; general-sum games
//! (only small ones) by support enumeration. Gaps against the full game use a
//! [`ResponseOracle`], so the same code certifies meta-games and POSGs.

use num_bigint::BigUint;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::lp::{FeasibleProgram, LinearProgram, Relation};
use crate::normal_form::NormalFormGame;
use crate::posg::{MixedPolicy, Player, Posg, PosgError};
use crate::rational::Q;
use crate::response::ResponseOracle;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("game is not flagged zero-sum")]
    NotZeroSum,
    #[error("support enumeration over {requested} support pairs exceeds the cap of {cap}")]
    EnumerationCapExceeded { requested: String, cap: u64 },
    #[error(transparent)]
    Game(#[from] PosgError),
    #[error("best-response oracle failed: {0}")]
    Oracle(String),
}

/// Strategies of both players with exact values and the improvement each
/// player could still gain by a pure deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    pub strategies: [Vec<Q>; 2],
    /// Expected payoff to each player; for zero-sum games `values[0]` is the game value.
    pub values: [Q; 2],
    pub improvements: [Q; 2],
}

impl EquilibriumResult {
    pub fn support(&self, player: Player) -> Vec<usize> {
        support_of(&self.strategies[player.index()])
    }

    pub fn is_exact(&self) -> bool {
        self.improvements.iter().all(Zero::is_zero)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessCertificate {
    pub unique: bool,
    pub per_player: [bool; 2],
    /// A second optimal strategy, different from the solver's, for the first
    /// player whose optimal set is not a point.
    pub witness: Option<(Player, Vec<Q>)>,
}

pub fn support_of(dist: &[Q]) -> Vec<usize> {
    dist.iter()
        .enumerate()
        .filter(|(_, w)| !w.is_zero())
        .map(|(i, _)| i)
        .collect()
}

/// Payoffs to the row side of a player's view: rows are that player's strategies.
fn player_view(nfg: &NormalFormGame, player: Player) -> Vec<Vec<Q>> {
    match player {
        Player::One => nfg.matrix(Player::One).to_vec(),
        Player::Two => nfg.transposed().matrix(Player::One).to_vec(),
    }
}

/// Optimal strategies of both sides of the zero-sum matrix `a` (row player
/// maximizing) and the row player's value.
fn saddle(a: &[Vec<Q>]) -> (Vec<Q>, Vec<Q>, Q) {
    let n = a[0].len();
    let low = a.iter().flatten().min().expect("nonempty matrix").clone();
    let shift = Q::one() - low;
    // Column player's packing program: max sum y, (A + shift) y <= 1. Its
    // optimum is 1/v and the row duals rescale to the row player's strategy.
    let mut lp = LinearProgram::new(n).maximize((0..n).map(|j| (j, Q::one())).collect());
    for row in a {
        lp.constrain(
            row.iter().enumerate().map(|(j, v)| (j, v + &shift)).collect(),
            Relation::Le,
            Q::one(),
        );
    }
    let (y, total, duals) = lp.solve_with_duals().expect("positive matrices bound the packing program");
    let value = total.recip();
    let p = duals.into_iter().map(|d| d * &value).collect();
    let q = y.into_iter().map(|d| d * &value).collect();
    (p, q, value - shift)
}

/// Maximin strategy and value of the row player of `a`.
fn maximin(a: &[Vec<Q>]) -> (Vec<Q>, Q) {
    let (p, _, v) = saddle(a);
    (p, v)
}

/// The row player's optimal strategies, as an LP over the rows that can
/// carry weight. Rows scoring below `value` against the opponent's optimal
/// `opponent` get none, and columns in its support must be tight.
struct Face {
    rows: Vec<usize>,
    program: FeasibleProgram,
    width: usize,
}

impl Face {
    fn new(a: &[Vec<Q>], value: &Q, opponent: &[Q]) -> Face {
        let rows: Vec<usize> = (0..a.len())
            .filter(|&i| {
                let score: Q = a[i].iter().zip(opponent).filter(|(_, y)| !y.is_zero()).map(|(x, y)| x * y).sum();
                score == *value
            })
            .collect();
        let mut lp = LinearProgram::new(rows.len());
        for (j, y) in opponent.iter().enumerate() {
            let relation = if y.is_zero() { Relation::Ge } else { Relation::Eq };
            lp.constrain(rows.iter().enumerate().map(|(v, &i)| (v, a[i][j].clone())).collect(), relation, value.clone());
        }
        lp.constrain((0..rows.len()).map(|v| (v, Q::one())).collect(), Relation::Eq, Q::one());
        let program = lp.feasible().expect("optimal face is nonempty");
        Face { rows, program, width: a.len() }
    }

    fn var(&self, row: usize) -> Option<usize> {
        self.rows.iter().position(|&i| i == row)
    }

    fn lift(&self, x: &[Q]) -> Vec<Q> {
        let mut full = vec![Q::zero(); self.width];
        for (v, &i) in self.rows.iter().enumerate() {
            full[i] = x[v].clone();
        }
        full
    }

    /// The face point minimizing the weight on `row`.
    fn lowest(&self, row: usize) -> Vec<Q> {
        let v = self.var(row).expect("row carries weight");
        let (x, _) = self.program.maximize(&[(v, -Q::one())]).expect("the face is bounded");
        self.lift(&x)
    }
}

/// Exact maximin/minimax solution of a zero-sum game.
pub fn solve_zero_sum(nfg: &NormalFormGame) -> Result<EquilibriumResult, EquilibriumError> {
    if !nfg.is_zero_sum() {
        return Err(EquilibriumError::NotZeroSum);
    }
    let (p, q, _) = saddle(nfg.matrix(Player::One));
    Ok(certify(nfg, p, q))
}

/// The equilibrium whose strategies are lexicographically greatest under the
/// given priority orders: first maximise the probability of `order[i][0]`,
/// then of `order[i][1]`, and so on, within each player's optimal set.
pub fn lexicographic_zero_sum(
    nfg: &NormalFormGame,
    order: [&[usize]; 2],
) -> Result<EquilibriumResult, EquilibriumError> {
    if !nfg.is_zero_sum() {
        return Err(EquilibriumError::NotZeroSum);
    }
    let (p, q, value) = saddle(nfg.matrix(Player::One));
    let views = [player_view(nfg, Player::One), player_view(nfg, Player::Two)];
    let points = [p, q];
    let values = [value.clone(), -value];
    let mut strategies: [Vec<Q>; 2] = Default::default();
    for player in Player::BOTH {
        let i = player.index();
        let face = Face::new(&views[i], &values[i], &points[1 - i]);
        strategies[i] = if second_point(&face, &points[i]).is_none() {
            points[i].clone()
        } else {
            lexicographic_point(face, order[i])
        };
    }
    let [p, q] = strategies;
    Ok(certify(nfg, p, q))
}

fn lexicographic_point(face: Face, order: &[usize]) -> Vec<Q> {
    let objectives: Vec<Vec<(usize, Q)>> = order
        .iter()
        .filter_map(|&i| face.var(i))
        .map(|v| vec![(v, Q::one())])
        .collect();
    let x = face
        .program
        .clone()
        .maximize_lexicographic(&objectives)
        .expect("the face is bounded");
    face.lift(&x)
}

/// Decides whether each player's optimal-strategy polytope is a single
/// point. With `p` the solver's optimal strategy, the polytope contains
/// another point iff some coordinate in `supp(p)` can be lowered below
/// `p_i` on the optimal face (weights sum to one); each support coordinate
/// is probed with its own LP.
pub fn is_unique_zero_sum_equilibrium(nfg: &NormalFormGame) -> Result<UniquenessCertificate, EquilibriumError> {
    let solution = solve_zero_sum(nfg)?;
    Ok(uniqueness_from(nfg, &solution))
}

/// Uniqueness probe around an already computed optimal profile.
pub fn uniqueness_from(nfg: &NormalFormGame, solution: &EquilibriumResult) -> UniquenessCertificate {
    let mut per_player = [true, true];
    let mut witness = None;
    for player in Player::BOTH {
        let a = player_view(nfg, player);
        let value = match player {
            Player::One => solution.values[0].clone(),
            Player::Two => solution.values[1].clone(),
        };
        let point = &solution.strategies[player.index()];
        let opponent = &solution.strategies[player.other().index()];
        let face = Face::new(&a, &value, opponent);
        if let Some(x) = second_point(&face, point) {
            per_player[player.index()] = false;
            if witness.is_none() {
                witness = Some((player, x));
            }
        }
    }
    UniquenessCertificate {
        unique: per_player[0] && per_player[1],
        per_player,
        witness,
    }
}

/// A point of `face` other than `point`, found by lowering one support
/// coordinate at a time.
fn second_point(face: &Face, point: &[Q]) -> Option<Vec<Q>> {
    if face.rows.len() == 1 {
        return None;
    }
    for i in support_of(point) {
        let x = face.lowest(i);
        if x[i] < point[i] {
            return Some(x);
        }
    }
    None
}

/// Exact payoffs and pure-deviation improvements of a mixed profile.
pub fn certify(nfg: &NormalFormGame, p: Vec<Q>, q: Vec<Q>) -> EquilibriumResult {
    let (improvements, values) = matrix_improvements(nfg, &p, &q);
    EquilibriumResult {
        strategies: [p, q],
        values,
        improvements,
    }
}

/// `(improvements, values)` of the profile `(p, q)` in the matrix game.
pub fn matrix_improvements(nfg: &NormalFormGame, p: &[Q], q: &[Q]) -> ([Q; 2], [Q; 2]) {
    let (rows, cols) = nfg.dims();
    let mut values = [Q::zero(), Q::zero()];
    let mut row_payoff = vec![Q::zero(); rows];
    let mut col_payoff = vec![Q::zero(); cols];
    for r in 0..rows {
        for c in 0..cols {
            if !q[c].is_zero() {
                row_payoff[r] += nfg.payoff(Player::One, r, c) * &q[c];
            }
            if !p[r].is_zero() {
                col_payoff[c] += nfg.payoff(Player::Two, r, c) * &p[r];
            }
        }
    }
    for r in 0..rows {
        values[0] += &p[r] * &row_payoff[r];
    }
    for c in 0..cols {
        values[1] += &q[c] * &col_payoff[c];
    }
    let best_row = row_payoff.into_iter().max().expect("nonempty");
    let best_col = col_payoff.into_iter().max().expect("nonempty");
    let improvements = [best_row - &values[0], best_col - &values[1]];
    (improvements, values)
}

fn binomial_sum(n: usize, max: usize) -> BigUint {
    let mut total = BigUint::zero();
    let mut c = BigUint::one();
    for s in 1..=max.min(n) {
        c = c * BigUint::from(n - s + 1) / BigUint::from(s);
        total += &c;
    }
    total
}

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < size - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, size, &mut Vec::new(), &mut out);
    out
}

/// Mixed strategy over `support` of the player whose payoff matrix (rows =
/// that player's strategies, columns = opponent's) is `own`, making every
/// opponent strategy in `opp_support` a best response in `opp` (the
/// opponent's payoffs, rows = opponent strategies). Full support on
/// `support` is required.
fn indifference_strategy(opp: &[Vec<Q>], support: &[usize], opp_support: &[usize]) -> Option<Vec<Q>> {
    let n_opp = opp.len();
    let n_own = opp[0].len();
    let k = support.len();
    let low = opp.iter().flatten().min().expect("nonempty").clone();
    let shift = Q::one() - low;
    // variables: x_0..x_{k-1} (weights on support), u (opponent payoff), delta
    let u = k;
    let delta = k + 1;
    let mut lp = LinearProgram::new(k + 2).maximize(vec![(delta, Q::one())]);
    for r in 0..n_opp {
        let mut row: Vec<(usize, Q)> = support
            .iter()
            .enumerate()
            .map(|(x, &s)| (x, &opp[r][s] + &shift))
            .collect();
        row.push((u, -Q::one()));
        let relation = if opp_support.contains(&r) {
            Relation::Eq
        } else {
            Relation::Le
        };
        lp.constrain(row, relation, Q::zero());
    }
    lp.constrain((0..k).map(|x| (x, Q::one())).collect(), Relation::Eq, Q::one());
    for x in 0..k {
        lp.constrain(vec![(x, Q::one()), (delta, -Q::one())], Relation::Ge, Q::zero());
    }
    let (vals, best) = lp.solve().optimal()?;
    if !best.is_positive() {
        return None;
    }
    let mut dist = vec![Q::zero(); n_own];
    for (x, &s) in support.iter().enumerate() {
        dist[s] = vals[x].clone();
    }
    Some(dist)
}

/// All equilibria found by support enumeration with per-player supports of
/// size at most `max_support`: one representative (with exactly that
/// support pair) for each support pair admitting an equilibrium.
pub fn enumerate_nash_bimatrix(
    nfg: &NormalFormGame,
    max_support: usize,
    cap: u64,
) -> Result<Vec<EquilibriumResult>, EquilibriumError> {
    support_enumeration(nfg, max_support, cap, usize::MAX)
}

/// The first equilibrium in support-enumeration order (smallest supports
/// first, then lexicographic supports), if any.
pub fn first_nash_bimatrix(
    nfg: &NormalFormGame,
    max_support: usize,
    cap: u64,
) -> Result<Option<EquilibriumResult>, EquilibriumError> {
    Ok(support_enumeration(nfg, max_support, cap, 1)?.pop())
}

fn support_enumeration(
    nfg: &NormalFormGame,
    max_support: usize,
    cap: u64,
    limit: usize,
) -> Result<Vec<EquilibriumResult>, EquilibriumError> {
    let (rows, cols) = nfg.dims();
    let pairs = binomial_sum(rows, max_support) * binomial_sum(cols, max_support);
    if pairs.to_u64().is_none_or(|p| p > cap) {
        return Err(EquilibriumError::EnumerationCapExceeded {
            requested: pairs.to_string(),
            cap,
        });
    }
    // Opponent payoff views: rows = the opponent's strategies.
    let p2_rows = nfg.transposed().matrix(Player::One).to_vec(); // P2 payoffs, rows = cols
    let p1_rows = nfg.matrix(Player::One).to_vec(); // P1 payoffs, rows = rows
    let mut found = Vec::new();
    for s1 in 1..=max_support.min(rows) {
        for s2 in 1..=max_support.min(cols) {
            for rs in subsets(rows, s1) {
                for cs in subsets(cols, s2) {
                    let Some(q) = indifference_strategy(&p1_rows, &cs, &rs) else {
                        continue;
                    };
                    let Some(p) = indifference_strategy(&p2_rows, &rs, &cs) else {
                        continue;
                    };
                    let result = certify(nfg, p, q);
                    debug_assert!(result.is_exact());
                    found.push(result);
                    if found.len() >= limit {
                        return Ok(found);
                    }
                }
            }
        }
    }
    Ok(found)
}

/// Smallest per-player support size over all exact equilibria, searched by
/// support enumeration up to `max_support`.
pub fn minimum_nash_support(nfg: &NormalFormGame, max_support: usize, cap: u64) -> Result<Option<[usize; 2]>, EquilibriumError> {
    let all = enumerate_nash_bimatrix(nfg, max_support, cap)?;
    Ok(all
        .iter()
        .map(|e| [e.support(Player::One).len(), e.support(Player::Two).len()])
        .min_by_key(|s| (s[0].max(s[1]), s[0] + s[1])))
}

/// Value guaranteed by the row player when restricted to `rows`.
pub fn restricted_value(nfg: &NormalFormGame, player: Player, strategies: &[usize]) -> Q {
    let a = player_view(nfg, player);
    let sub: Vec<Vec<Q>> = strategies.iter().map(|&i| a[i].clone()).collect();
    maximin(&sub).1
}

/// Per-player improvements and their sum (the Nash gap).
#[derive(Debug, Clone, PartialEq)]
pub struct NashGap {
    pub values: [Q; 2],
    pub best_response_values: [Q; 2],
    pub improvements: [Q; 2],
    pub gap: Q,
}

pub fn nash_gap(
    game: &Posg,
    m1: &MixedPolicy,
    m2: &MixedPolicy,
    oracle: &dyn ResponseOracle,
) -> Result<NashGap, EquilibriumError> {
    let values = game.evaluate_mixed(m1, m2)?;
    nash_gap_with_values(game, m1, m2, values, oracle)
}

/// As [`nash_gap`] with the profile's values already known.
pub fn nash_gap_with_values(
    game: &Posg,
    m1: &MixedPolicy,
    m2: &MixedPolicy,
    values: [Q; 2],
    oracle: &dyn ResponseOracle,
) -> Result<NashGap, EquilibriumError> {
    let err = |e: crate::response::ResponseError| EquilibriumError::Oracle(e.to_string());
    let b1 = oracle.value(game, Player::One, m2).map_err(err)?;
    let b2 = oracle.value(game, Player::Two, m1).map_err(err)?;
    let improvements = [&b1 - &values[0], &b2 - &values[1]];
    let gap = &improvements[0] + &improvements[1];
    Ok(NashGap {
        values,
        best_response_values: [b1, b2],
        improvements,
        gap,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumCertificate {
    pub improvements: [Q; 2],
    pub eps: Q,
    pub passed: bool,
}

/// Passes iff neither player can improve by more than `eps`.
pub fn verify_equilibrium(
    game: &Posg,
    m1: &MixedPolicy,
    m2: &MixedPolicy,
    eps: &Q,
    oracle: &dyn ResponseOracle,
) -> Result<EquilibriumCertificate, EquilibriumError> {
    let gap = nash_gap(game, m1, m2, oracle)?;
    let passed = gap.improvements.iter().all(|i| i <= eps);
    Ok(EquilibriumCertificate {
        improvements: gap.improvements,
        eps: eps.clone(),
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn zs(rows: &[&[i64]]) -> NormalFormGame {
        NormalFormGame::zero_sum(rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect()).unwrap()
    }

    #[test]
    fn matching_pennies_is_uniform() {
        let g = zs(&[&[1, -1], &[-1, 1]]);
        let e = solve_zero_sum(&g).unwrap();
        assert_eq!(e.strategies, [vec![q(1, 2), q(1, 2)], vec![q(1, 2), q(1, 2)]]);
        assert_eq!(e.values, [qi(0), qi(0)]);
        assert!(e.is_exact());
        assert!(is_unique_zero_sum_equilibrium(&g).unwrap().unique);
    }

    #[test]
    fn rock_paper_scissors_variant() {
        // Value 1/12 for the row player.
        let g = zs(&[&[0, 2, -1], &[-1, 0, 1], &[1, -1, 0]]);
        let e = solve_zero_sum(&g).unwrap();
        assert_eq!(e.values[0], q(1, 12));
        assert!(e.is_exact());
    }

    #[test]
    fn zeros_are_not_unique() {
        let g = zs(&[&[0, 0], &[0, 0]]);
        let cert = is_unique_zero_sum_equilibrium(&g).unwrap();
        assert!(!cert.unique);
        let (player, w) = cert.witness.unwrap();
        assert_eq!(player, Player::One);
        let e = solve_zero_sum(&g).unwrap();
        assert_ne!(w, e.strategies[0]);
    }

    #[test]
    fn rejects_general_sum() {
        let g = NormalFormGame::new(vec![vec![qi(1)]], vec![vec![qi(1)]]).unwrap();
        assert_eq!(solve_zero_sum(&g), Err(EquilibriumError::NotZeroSum));
        assert_eq!(is_unique_zero_sum_equilibrium(&g), Err(EquilibriumError::NotZeroSum));
    }

    #[test]
    fn lexicographic_prefers_early_strategies() {
        let g = zs(&[&[0, 0], &[0, 0]]);
        let e = lexicographic_zero_sum(&g, [&[0, 1], &[1, 0]]).unwrap();
        assert_eq!(e.strategies, [vec![qi(1), qi(0)], vec![qi(0), qi(1)]]);
    }

    #[test]
    fn support_enumeration_on_matching_pennies() {
        let g = zs(&[&[1, -1], &[-1, 1]]);
        let all = enumerate_nash_bimatrix(&g, 2, 1000).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].strategies[0], vec![q(1, 2), q(1, 2)]);
        assert!(matches!(
            enumerate_nash_bimatrix(&g, 2, 3),
            Err(EquilibriumError::EnumerationCapExceeded { .. })
        ));
    }

    #[test]
    fn support_enumeration_general_sum() {
        // Battle of the sexes: two pure equilibria and one mixed.
        let g = NormalFormGame::new(
            vec![vec![qi(2), qi(0)], vec![qi(0), qi(1)]],
            vec![vec![qi(1), qi(0)], vec![qi(0), qi(2)]],
        )
        .unwrap();
        let all = enumerate_nash_bimatrix(&g, 2, 1000).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(all[2].strategies[0], vec![q(2, 3), q(1, 3)]);
        assert_eq!(all[2].strategies[1], vec![q(1, 3), q(2, 3)]);
        assert_eq!(minimum_nash_support(&g, 2, 1000).unwrap(), Some([1, 1]));
    }
}
