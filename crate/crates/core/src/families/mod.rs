//! The five lower-bound game families, their direct normal-form oracles and
//! the integer encoding of their pure policies.
//!
//! Policies encode integers most significant bit first: for the binary
//! families bit `j` of the number is the action at the `j`-th key of the
//! policy domain, so numeric order equals canonical policy order.

pub mod chains;
pub mod incrementing;
pub mod pennies;
pub mod schedules;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normal_form::NormalFormGame;
use crate::posg::{Player, Posg, PurePolicy};

pub use chains::{
    bigger_number, bigger_number_matrix, guess_the_string, guess_the_string_matrix, weak_bigger_number,
    weak_bigger_number_matrix,
};
pub use incrementing::{incrementing, incrementing_matrix};
pub use pennies::{matching_pennies_chain, matching_pennies_chain_matrix};
pub use schedules::{init_for_theorem, schedule_for_theorem, tiebreak_for_theorem, Theorem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("{family} needs k in {min}..={max}, got {k}")]
    InvalidParameter { family: FamilyId, k: usize, min: usize, max: usize },
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("index {index} outside 0..{size}")]
    IndexOutOfRange { index: u64, size: u64 },
    #[error("policy is not an encoded {0} strategy")]
    NotEncoded(FamilyId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyId {
    GuessTheString,
    BiggerNumber,
    WeakBiggerNumber,
    Incrementing,
    MatchingPenniesChain,
}

/// Structural properties a family is built to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Structure {
    pub zero_sum: bool,
    pub fully_observable: bool,
    pub tree_form: bool,
}

impl FamilyId {
    pub const ALL: [FamilyId; 5] = [
        FamilyId::GuessTheString,
        FamilyId::BiggerNumber,
        FamilyId::WeakBiggerNumber,
        FamilyId::Incrementing,
        FamilyId::MatchingPenniesChain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyId::GuessTheString => "guess-the-string",
            FamilyId::BiggerNumber => "bigger-number",
            FamilyId::WeakBiggerNumber => "weak-bigger-number",
            FamilyId::Incrementing => "incrementing",
            FamilyId::MatchingPenniesChain => "matching-pennies-chain",
        }
    }

    pub fn min_k(self) -> usize {
        match self {
            FamilyId::Incrementing | FamilyId::MatchingPenniesChain => 2,
            _ => 1,
        }
    }

    /// Largest k whose policies still have `u64` indices.
    pub fn max_k(self) -> usize {
        match self {
            FamilyId::Incrementing => 16,
            _ => 62,
        }
    }

    pub fn structure(self) -> Structure {
        let (zero_sum, fully_observable, tree_form) = match self {
            FamilyId::GuessTheString => (true, true, false),
            FamilyId::BiggerNumber => (true, false, false),
            FamilyId::WeakBiggerNumber => (true, true, false),
            FamilyId::Incrementing => (false, false, true),
            FamilyId::MatchingPenniesChain => (true, true, true),
        };
        Structure {
            zero_sum,
            fully_observable,
            tree_form,
        }
    }

    /// Closed-form state count of the generated game.
    pub fn state_count(self, k: usize) -> usize {
        match self {
            FamilyId::GuessTheString => 2 * k + 1,
            FamilyId::BiggerNumber => 5 * k - 1,
            FamilyId::WeakBiggerNumber => 3 * k + 1,
            FamilyId::MatchingPenniesChain => 5 * k,
            FamilyId::Incrementing => {
                let a = 2 * k;
                let nodes = incrementing_chance_nodes(k);
                // root, one terminal per non-continuing root edge, and per
                // chance node one terminal per joint action
                1 + (a * a - continuing_root_edges(k)) + nodes * (1 + a * a)
            }
        }
    }

    fn check_k(self, k: usize) -> Result<(), FamilyError> {
        if k < self.min_k() || k > self.max_k() {
            return Err(FamilyError::InvalidParameter {
                family: self,
                k,
                min: self.min_k(),
                max: self.max_k(),
            });
        }
        Ok(())
    }

    /// Number of encoded strategies per player, `2^k`.
    pub fn strategy_count(self, k: usize) -> u64 {
        1u64 << k
    }
}

/// Root joint actions of the incrementing game that lead to a chance node.
fn continuing_root_edges(k: usize) -> usize {
    let mut total = 0;
    for l in 1..=k {
        // same run, or opposite runs of equal length
        if k >= l + 2 {
            total += 4;
        }
    }
    // a long run against the single opposite bit, either way round
    if k >= 3 {
        total += 4 * (k - 1);
    }
    total
}

fn incrementing_chance_nodes(k: usize) -> usize {
    let mut total = 0;
    for l in 1..=k {
        if k >= l + 2 {
            total += 4 * (k - l - 1);
        }
    }
    if k >= 3 {
        total += 4 * (k - 1) * (k - 2);
    }
    total
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyId {
    type Err = FamilyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        FamilyId::ALL
            .into_iter()
            .find(|f| f.name() == key || short_name(*f) == key)
            .ok_or_else(|| FamilyError::UnknownFamily(s.to_string()))
    }
}

fn short_name(f: FamilyId) -> &'static str {
    match f {
        FamilyId::GuessTheString => "gts",
        FamilyId::BiggerNumber => "bn",
        FamilyId::WeakBiggerNumber => "wbn",
        FamilyId::Incrementing => "inc",
        FamilyId::MatchingPenniesChain => "mpc",
    }
}

pub fn generate(family: FamilyId, k: usize) -> Result<Posg, FamilyError> {
    family.check_k(k)?;
    Ok(match family {
        FamilyId::GuessTheString => guess_the_string(k),
        FamilyId::BiggerNumber => bigger_number(k),
        FamilyId::WeakBiggerNumber => weak_bigger_number(k),
        FamilyId::Incrementing => incrementing(k),
        FamilyId::MatchingPenniesChain => matching_pennies_chain(k),
    })
}

/// The family's normal form computed directly from its rules, indexed by
/// encoded integers.
pub fn matrix_oracle(family: FamilyId, k: usize) -> Result<NormalFormGame, FamilyError> {
    family.check_k(k)?;
    let n = 1usize << k;
    Ok(match family {
        FamilyId::GuessTheString => guess_the_string_matrix(n),
        FamilyId::BiggerNumber => bigger_number_matrix(n),
        FamilyId::WeakBiggerNumber => weak_bigger_number_matrix(n),
        FamilyId::Incrementing => incrementing_matrix(n),
        FamilyId::MatchingPenniesChain => matching_pennies_chain_matrix(k),
    })
}

pub fn encode_policy(family: FamilyId, k: usize, player: Player, index: u64) -> Result<PurePolicy, FamilyError> {
    family.check_k(k)?;
    let size = family.strategy_count(k);
    if index >= size {
        return Err(FamilyError::IndexOutOfRange { index, size });
    }
    Ok(match family {
        FamilyId::Incrementing => incrementing::encode(k, player, index),
        _ => {
            let bits = (0..k).rev().map(|j| ((index >> j) & 1) as u32).collect();
            PurePolicy::new(player, bits)
        }
    })
}

pub fn decode_policy(family: FamilyId, k: usize, policy: &PurePolicy) -> Result<u64, FamilyError> {
    family.check_k(k)?;
    let actions = policy.actions();
    let decoded = match family {
        FamilyId::Incrementing => incrementing::decode(k, actions),
        _ if actions.len() == k && actions.iter().all(|&a| a < 2) => {
            Some(actions.iter().fold(0u64, |acc, &a| acc * 2 + a as u64))
        }
        _ => None,
    };
    decoded.ok_or(FamilyError::NotEncoded(family))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse() {
        for f in FamilyId::ALL {
            assert_eq!(f.name().parse::<FamilyId>().unwrap(), f);
        }
        assert_eq!("MPC".parse::<FamilyId>().unwrap(), FamilyId::MatchingPenniesChain);
        assert!("chess".parse::<FamilyId>().is_err());
    }

    #[test]
    fn state_counts_are_closed_form() {
        for f in FamilyId::ALL {
            let top = if f == FamilyId::Incrementing { 7 } else { 12 };
            for k in f.min_k()..=top {
                assert_eq!(generate(f, k).unwrap().num_states(), f.state_count(k), "{f} k={k}");
            }
        }
    }

    #[test]
    fn structure_flags_match() {
        for f in FamilyId::ALL {
            let g = generate(f, 3).unwrap();
            let s = f.structure();
            assert_eq!(g.is_zero_sum(), s.zero_sum, "{f}");
            assert_eq!(g.is_fully_observable(), s.fully_observable, "{f}");
            assert_eq!(g.is_tree_form(), s.tree_form, "{f}");
        }
    }

    #[test]
    fn rejects_bad_k() {
        assert!(matches!(
            generate(FamilyId::MatchingPenniesChain, 1),
            Err(FamilyError::InvalidParameter { .. })
        ));
        assert!(generate(FamilyId::GuessTheString, 0).is_err());
        assert!(matches!(
            encode_policy(FamilyId::BiggerNumber, 3, Player::One, 8),
            Err(FamilyError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn binary_encoding_is_msb_first() {
        let p = encode_policy(FamilyId::BiggerNumber, 3, Player::One, 5).unwrap();
        assert_eq!(p.actions(), &[1, 0, 1]);
        let g = bigger_number(3);
        assert_eq!(g.policy_index(&p).unwrap(), 5);
    }
}
