//! Per-iteration records of a double oracle run. Rationals serialize as
//! `"num/den"` strings.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rational::{format_q, parse_q, qpair, qser, Q};

/// Distribution over canonical policy indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Weighted(pub Vec<(u64, Q)>);

impl Weighted {
    pub fn pure(index: u64) -> Self {
        Weighted(vec![(index, Q::from_integer(1.into()))])
    }

    pub fn support(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().map(|(i, _)| *i)
    }

    pub fn max_index(&self) -> Option<u64> {
        self.support().max()
    }
}

impl Serialize for Weighted {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|(i, w)| (i, format_q(w))))
    }
}

impl<'de> Deserialize<'de> for Weighted {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw: Vec<(u64, String)> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|(i, w)| parse_q(&w).map(|w| (i, w)).map_err(serde::de::Error::custom))
            .collect::<Result<_, _>>()
            .map(Weighted)
    }
}

/// How a meta-Nash or response was selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Choice {
    Unique,
    Lexicographic,
    Random,
    Scripted,
    /// Scripted mode without a scripted entry for this iteration.
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Meta-game policy sets, in insertion order.
    pub policy_sets: [Vec<u64>; 2],
    pub meta_nash: [Weighted; 2],
    pub meta_nash_choice: Choice,
    /// Whether the meta-game's optimal strategies are unique (zero-sum
    /// unique-or-fail runs only).
    pub meta_nash_unique: Option<bool>,
    /// Best pure deviation gain inside the meta-game; zero for a meta-Nash.
    #[serde(with = "qpair")]
    pub meta_improvements: [Q; 2],
    #[serde(with = "qpair")]
    pub meta_values: [Q; 2],
    pub responses: [u64; 2],
    pub response_choices: [Choice; 2],
    /// Number of pure best responses, in decimal.
    pub response_counts: [String; 2],
    #[serde(with = "qpair")]
    pub response_values: [Q; 2],
    #[serde(with = "qpair")]
    pub improvements: [Q; 2],
    #[serde(with = "qser")]
    pub gap: Q,
    pub added: [bool; 2],
    pub gated: [bool; 2],
    /// Largest canonical index in either policy set before and after the
    /// iteration's additions.
    pub max_index: [u64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    /// Iterations that added at least one policy.
    pub iterations: usize,
    pub converged: bool,
    /// Gated run that stopped with nothing left to add.
    pub stalled: bool,
    #[serde(with = "qser")]
    pub final_gap: Q,
    pub final_profile: [Weighted; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub algorithm: String,
    #[serde(with = "qser")]
    pub eps: Q,
    pub alpha: Option<String>,
    pub init: [u64; 2],
    pub records: Vec<IterationRecord>,
    pub outcome: Option<Outcome>,
}

impl RunTrace {
    pub fn iterations(&self) -> Option<usize> {
        self.outcome.as_ref().map(|o| o.iterations)
    }

    pub fn gaps(&self) -> Vec<&Q> {
        self.records.iter().map(|r| &r.gap).collect()
    }
}
