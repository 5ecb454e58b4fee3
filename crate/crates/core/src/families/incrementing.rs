//! The incrementing game: each player gains by naming exactly one more than
//! the opponent. The tree-form version asks for the trailing run of the
//! bitstring first (`2k` actions: `0`, `1`, `00`, `11`, ...) and then, at a
//! uniformly drawn disclosed bit index, for the bit itself.

use std::ops::RangeInclusive;

use num_traits::One;

use crate::normal_form::NormalFormGame;
use crate::posg::{Player, Posg, PosgSpec, StateSpec};
use crate::rational::{q, qi, Q};

/// Reward for incrementing the opponent when the sampled bits agree.
pub fn alpha(k: usize) -> Q {
    q(1, 2 * k as i64)
}

/// A trailing run `bit^len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub bit: usize,
    pub len: usize,
}

impl Run {
    pub fn from_action(action: usize) -> Run {
        Run {
            bit: action % 2,
            len: action / 2 + 1,
        }
    }

    pub fn action(self) -> usize {
        2 * (self.len - 1) + self.bit
    }

    /// Bit forced at index `i` (1-based, most significant first) by the run,
    /// if any: the bit just before the run is the opposite bit.
    pub fn forced_bit(self, k: usize, i: usize) -> Option<usize> {
        let boundary = k - self.len;
        if i > boundary {
            Some(self.bit)
        } else if i == boundary {
            Some(1 - self.bit)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layer {
    /// Same run on both sides: agreement on every sampled bit draws.
    Same,
    /// Runs of equal length and opposite bits.
    Opposite { incrementer: Player },
    /// A long run against a single opposite bit; the long side's bits from
    /// the run boundary on are fixed by its run.
    LongShort { long: Player, incrementer: Player },
}

enum RootOutcome {
    Terminal([Q; 2]),
    Continue { layer: Layer, range: RangeInclusive<usize> },
}

fn both(v: i64) -> [Q; 2] {
    [qi(v), qi(v)]
}

fn increment_payoff(k: usize, incrementer: Player) -> [Q; 2] {
    let mut r = both(-1);
    r[incrementer.index()] = alpha(k);
    r
}

fn classify(k: usize, runs: [Run; 2]) -> RootOutcome {
    let [r1, r2] = runs;
    let (layer, hi) = if r1.len != r2.len {
        if r1.bit == r2.bit || (r1.len > 1 && r2.len > 1) {
            return RootOutcome::Terminal(both(-2));
        }
        let long = if r1.len > 1 { Player::One } else { Player::Two };
        // A long zero run is incremented by the single one; a long one run
        // increments the single zero.
        let incrementer = if runs[long.index()].bit == 0 { long.other() } else { long };
        (Layer::LongShort { long, incrementer }, k.saturating_sub(2))
    } else if r1.bit == r2.bit {
        (Layer::Same, k.saturating_sub(r1.len + 1))
    } else {
        if r1.len == k {
            return RootOutcome::Terminal(both(-1));
        }
        let incrementer = if r1.bit == 0 { Player::One } else { Player::Two };
        (Layer::Opposite { incrementer }, k - r1.len - 1)
    };
    if hi == 0 {
        return RootOutcome::Terminal(match layer {
            Layer::Same => both(0),
            Layer::Opposite { incrementer } | Layer::LongShort { incrementer, .. } => increment_payoff(k, incrementer),
        });
    }
    RootOutcome::Continue { layer, range: 1..=hi }
}

fn leaf(k: usize, runs: [Run; 2], layer: Layer, i: usize, bits: [usize; 2]) -> [Q; 2] {
    if bits.iter().any(|&b| b > 1) {
        return both(-2);
    }
    if let Layer::LongShort { long, .. } = layer {
        if let Some(forced) = runs[long.index()].forced_bit(k, i) {
            if bits[long.index()] != forced {
                return both(-2);
            }
        }
    }
    let matched = bits[0] == bits[1];
    match layer {
        Layer::Same if matched => both(0),
        Layer::Same => both(-1),
        Layer::Opposite { incrementer } | Layer::LongShort { incrementer, .. } => {
            if matched {
                increment_payoff(k, incrementer)
            } else {
                both(-1)
            }
        }
    }
}

/// The tree-form incrementing game for `k >= 2`.
pub fn incrementing(k: usize) -> Posg {
    assert!(k >= 2, "the incrementing game needs k >= 2");
    let actions = 2 * k;
    let mut spec = PosgSpec::new(actions, actions, false);
    spec.add_metadata("family", "incrementing");
    spec.add_metadata("k", k.to_string());
    spec.add_metadata("opposite_full_runs", "both_lose");
    spec.add_metadata("forced_bit_deviation", "both_score_-2");
    let root = spec.add_state(StateSpec::decision("root", 0, 0));
    spec.start.push((root, Q::one()));
    for a1 in 0..actions {
        for a2 in 0..actions {
            let runs = [Run::from_action(a1), Run::from_action(a2)];
            match classify(k, runs) {
                RootOutcome::Terminal([r1, r2]) => {
                    let z = spec.add_state(StateSpec::terminal(format!("root_{a1}_{a2}"), r1, r2));
                    spec.add_edge(root, a1, a2, z);
                }
                RootOutcome::Continue { layer, range } => {
                    let p = q(1, range.clone().count() as i64);
                    for i in range {
                        let node = spec.add_state(StateSpec::decision(format!("bit_{a1}_{a2}_{i}"), i as u32, i as u32));
                        spec.add_transition(root, a1, a2, node, p.clone());
                        for b1 in 0..actions {
                            for b2 in 0..actions {
                                let [r1, r2] = leaf(k, runs, layer, i, [b1, b2]);
                                let z = spec.add_state(StateSpec::terminal(format!("leaf_{a1}_{a2}_{i}_{b1}_{b2}"), r1, r2));
                                spec.add_edge(node, b1, b2, z);
                            }
                        }
                    }
                }
            }
        }
    }
    Posg::build(spec).expect("incrementing game is well formed")
}

/// Bits of `x` as a `k`-bit string, most significant first.
pub fn bits_of(x: u64, k: usize) -> Vec<usize> {
    (0..k).rev().map(|j| ((x >> j) & 1) as usize).collect()
}

/// Trailing run of a bitstring.
pub fn trailing_run(bits: &[usize]) -> Run {
    let last = *bits.last().expect("nonempty bitstring");
    let len = bits.iter().rev().take_while(|&&b| b == last).count();
    Run { bit: last, len }
}

/// Exact payoffs of the bitstring strategies, computed from the bitstrings
/// themselves: `n = 2^k` numbers, `u(a, a) = (0, 0)`,
/// `u(a + 1, a) = (1/2k, -1)` and every other pair negative for both.
pub fn incrementing_matrix(n: usize) -> NormalFormGame {
    assert!(n.is_power_of_two() && n >= 4, "incrementing matrix needs n = 2^k with k >= 2");
    let k = n.trailing_zeros() as usize;
    NormalFormGame::from_fn(n, n, |a, b| bitstring_payoff(k, a as u64, b as u64))
}

fn bitstring_payoff(k: usize, a: u64, b: u64) -> [Q; 2] {
    let x = bits_of(a, k);
    let y = bits_of(b, k);
    let (ra, rb) = (trailing_run(&x), trailing_run(&y));
    let alpha = alpha(k);
    // fraction of positions 1..=hi where the strings agree
    let agreement = |hi: usize| -> Option<Q> {
        (hi > 0).then(|| {
            let same = (0..hi).filter(|&j| x[j] == y[j]).count();
            q(same as i64, hi as i64)
        })
    };
    let increment = |hi: usize, p1_increments: bool| -> [Q; 2] {
        let score = match agreement(hi) {
            Some(f) => &alpha * &f - (Q::one() - &f),
            None => alpha.clone(),
        };
        if p1_increments {
            [score, qi(-1)]
        } else {
            [qi(-1), score]
        }
    };
    if ra.len == rb.len {
        let hi = k - ra.len;
        let hi = hi.saturating_sub(1);
        if ra.bit == rb.bit {
            let f = agreement(hi).unwrap_or_else(Q::one);
            let r = f - Q::one();
            return [r.clone(), r];
        }
        if ra.len == k {
            return both(-1);
        }
        return increment(hi, ra.bit == 0);
    }
    if ra.bit == rb.bit || (ra.len > 1 && rb.len > 1) {
        return both(-2);
    }
    let p1_long = ra.len > 1;
    let long_bit = if p1_long { ra.bit } else { rb.bit };
    let p1_increments = (long_bit == 1) == p1_long;
    increment(k - 2, p1_increments)
}

/// Policy of `player` that plays bitstring `x`: its trailing run at the
/// root and its own bits at every disclosed index.
pub fn encode(k: usize, player: Player, x: u64) -> crate::posg::PurePolicy {
    let bits = bits_of(x, k);
    let mut actions = vec![trailing_run(&bits).action() as u32];
    actions.extend(bits[..k - 2].iter().map(|&b| b as u32));
    crate::posg::PurePolicy::new(player, actions)
}

/// Canonical policy index of `encode(k, _, x)` in [`incrementing`]`(k)`.
pub fn canonical_index(k: usize, x: u64) -> u64 {
    let radix = 2 * k as u64;
    encode(k, Player::One, x)
        .actions()
        .iter()
        .fold(0, |acc, &a| acc * radix + a as u64)
}

/// Inverse of [`encode`]; `None` for policies that are not bitstring strategies.
pub fn decode(k: usize, actions: &[u32]) -> Option<u64> {
    if actions.len() != k - 1 {
        return None;
    }
    let run = Run::from_action(actions[0] as usize);
    if run.len > k {
        return None;
    }
    let mut bits = vec![0usize; k];
    for i in 1..=k {
        bits[i - 1] = match run.forced_bit(k, i) {
            Some(b) => b,
            None => actions[i] as usize,
        };
        if i <= k - 2 && actions[i] as usize != bits[i - 1] {
            return None;
        }
    }
    Some(bits.iter().fold(0u64, |acc, &b| acc * 2 + b as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_round_trip() {
        for a in 0..8 {
            assert_eq!(Run::from_action(a).action(), a);
        }
        assert_eq!(trailing_run(&[1, 0, 0]), Run { bit: 0, len: 2 });
        assert_eq!(trailing_run(&[1, 1, 1]), Run { bit: 1, len: 3 });
    }

    #[test]
    fn encoding_is_a_bijection() {
        for k in 2..=5 {
            for x in 0..(1u64 << k) {
                let p = encode(k, Player::One, x);
                assert_eq!(decode(k, p.actions()), Some(x), "k={k} x={x}");
            }
        }
        assert_eq!(decode(3, &[0, 1]), Some(6));
        assert_eq!(decode(3, &[2, 1]), Some(4));
        assert_eq!(decode(3, &[2, 0]), None);
    }

    #[test]
    fn canonical_index_matches_domain() {
        for k in 2..=4 {
            let g = incrementing(k);
            for x in 0..(1u64 << k) {
                let p = encode(k, Player::Two, x);
                assert_eq!(g.policy_index(&p).unwrap(), canonical_index(k, x));
            }
        }
    }

    #[test]
    fn matrix_has_the_incrementing_pattern() {
        for k in 2..=4 {
            let n = 1usize << k;
            let m = incrementing_matrix(n);
            for a in 0..n {
                for b in 0..n {
                    let u = [m.payoff(Player::One, a, b), m.payoff(Player::Two, a, b)];
                    if a == b {
                        assert_eq!(u, [&qi(0), &qi(0)]);
                    } else if a == b + 1 {
                        assert_eq!(u, [&alpha(k), &qi(-1)], "k={k} a={a} b={b}");
                    } else if b == a + 1 {
                        assert_eq!(u, [&qi(-1), &alpha(k)], "k={k} a={a} b={b}");
                    } else {
                        assert!(u[0] < &qi(0) && u[1] < &qi(0), "k={k} a={a} b={b}");
                    }
                }
            }
        }
    }

    #[test]
    fn posg_agrees_with_matrix_on_bitstrings() {
        for k in 2..=4 {
            let g = incrementing(k);
            assert!(g.is_tree_form());
            let m = incrementing_matrix(1 << k);
            for a in 0..(1u64 << k) {
                for b in 0..(1u64 << k) {
                    let v = g
                        .evaluate_profile(&encode(k, Player::One, a), &encode(k, Player::Two, b))
                        .unwrap();
                    let (a, b) = (a as usize, b as usize);
                    assert_eq!(&v[0], m.payoff(Player::One, a, b), "k={k} a={a} b={b}");
                    assert_eq!(&v[1], m.payoff(Player::Two, a, b), "k={k} a={a} b={b}");
                }
            }
        }
    }
}
