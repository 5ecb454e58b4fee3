//! Start profiles, tiebreaking and adversarial schedules for the lower-bound
//! runs, one per family.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::incrementing::canonical_index;
use super::{FamilyError, FamilyId};
use crate::dynamics::{ResponseScript, Schedule, ScheduleStep, TiebreakPolicy, Weighted};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Theorem {
    T1,
    T2,
    T3,
    T4,
    T5,
}

impl Theorem {
    pub const ALL: [Theorem; 5] = [Theorem::T1, Theorem::T2, Theorem::T3, Theorem::T4, Theorem::T5];

    pub fn family(self) -> FamilyId {
        match self {
            Theorem::T1 => FamilyId::GuessTheString,
            Theorem::T2 => FamilyId::BiggerNumber,
            Theorem::T3 => FamilyId::WeakBiggerNumber,
            Theorem::T4 => FamilyId::Incrementing,
            Theorem::T5 => FamilyId::MatchingPenniesChain,
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", *self as usize + 1)
    }
}

impl FromStr for Theorem {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Theorem::ALL
            .into_iter()
            .find(|t| t.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown theorem `{s}` (expected T1..T5)"))
    }
}

fn check(theorem: Theorem, k: usize) -> Result<(), FamilyError> {
    let family = theorem.family();
    let min = family.min_k().max(2);
    if k < min || k > family.max_k() {
        return Err(FamilyError::InvalidParameter {
            family,
            k,
            min,
            max: family.max_k(),
        });
    }
    Ok(())
}

/// Canonical index of the family strategy encoding `x`.
fn index(theorem: Theorem, k: usize, x: u64) -> u64 {
    match theorem {
        Theorem::T4 => canonical_index(k, x),
        _ => x,
    }
}

/// Canonical start indices.
pub fn init_for_theorem(theorem: Theorem, k: usize) -> Result<[u64; 2], FamilyError> {
    check(theorem, k)?;
    Ok(match theorem {
        Theorem::T5 => [(1u64 << k) - 1, 0],
        _ => [index(theorem, k, 0); 2],
    })
}

/// The adversarial schedule; empty for the theorems whose runs use
/// unique-or-fail or lexicographic choices.
pub fn schedule_for_theorem(theorem: Theorem, k: usize) -> Result<Schedule, FamilyError> {
    check(theorem, k)?;
    let n = 1u64 << k;
    Ok(match theorem {
        Theorem::T1 | Theorem::T2 => Schedule::default(),
        Theorem::T3 => Schedule::every_iteration([Some(ResponseScript::MaxSupportPlusOne); 2]),
        Theorem::T4 => {
            let steps = (1..n)
                .map(|t| {
                    let held = index(theorem, k, t - 1);
                    let next = ResponseScript::Policy(index(theorem, k, t));
                    ScheduleStep {
                        meta_nash: Some([Weighted::pure(held), Weighted::pure(held)]),
                        responses: [Some(next); 2],
                    }
                })
                .collect();
            Schedule { steps, tail: None }
        }
        Theorem::T5 => {
            let half = n / 2;
            let steps = (1..=half)
                .map(|t| ScheduleStep {
                    meta_nash: Some([Weighted::pure(n - 1), Weighted::pure(t - 1)]),
                    // at t = 2^(k-1) P2's scripted successor stops being a best response
                    responses: [
                        Some(ResponseScript::Policy(t - 1)),
                        (t < half).then_some(ResponseScript::Policy(t)),
                    ],
                })
                .collect();
            Schedule { steps, tail: None }
        }
    })
}

/// Tiebreaking used by the theorem's run.
pub fn tiebreak_for_theorem(theorem: Theorem, k: usize) -> Result<TiebreakPolicy, FamilyError> {
    let init = init_for_theorem(theorem, k)?;
    Ok(match theorem {
        Theorem::T1 => TiebreakPolicy::lexicographic(init),
        Theorem::T2 => TiebreakPolicy::unique_or_fail(init),
        _ => TiebreakPolicy::scripted(init, schedule_for_theorem(theorem, k)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem_names_roundtrip() {
        for t in Theorem::ALL {
            assert_eq!(t.to_string().parse::<Theorem>().unwrap(), t);
        }
        assert!("t6".parse::<Theorem>().is_err());
    }

    #[test]
    fn t5_schedule_shape() {
        let s = schedule_for_theorem(Theorem::T5, 3).unwrap();
        assert_eq!(s.steps.len(), 4);
        let second = s.step(2).unwrap();
        assert_eq!(second.meta_nash.as_ref().unwrap()[1], Weighted::pure(1));
        assert_eq!(second.responses, [Some(ResponseScript::Policy(1)), Some(ResponseScript::Policy(2))]);
        assert_eq!(s.step(4).unwrap().responses[1], None);
        assert_eq!(init_for_theorem(Theorem::T5, 3).unwrap(), [7, 0]);
    }
}
