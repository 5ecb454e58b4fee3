//! Iterative solvers over a growing policy population: double oracle, its
//! gated variant, fictitious play and best-response dynamics.
//!
//! Every choice the algorithm makes (meta-Nash, best responses, start
//! policies) goes through a [`TiebreakPolicy`]. Scripted choices are
//! certified before use: a scripted meta-Nash must have zero exact
//! improvement inside the meta-game and a scripted response must attain the
//! exact best-response value.

mod double_oracle;
mod learning;
pub mod trace;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equilibrium::EquilibriumError;
use crate::posg::{Player, PosgError};
use crate::response::ResponseError;

pub use double_oracle::{run_alpha_double_oracle, run_double_oracle, MetaGame};
pub use learning::{run_best_response_dynamics, run_fictitious_play, BrdRecord, BrdTrace, FpRecord, FpTrace};
pub use trace::{Choice, IterationRecord, Outcome, RunTrace, Weighted};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetaNashMode {
    UniqueOrFail,
    Lexicographic,
    Scripted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseMode {
    UniqueOrFail,
    Lexicographic,
    SeededRandom,
    Scripted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// Canonical indices of the two start policies.
    Given([u64; 2]),
    /// Uniform over each player's pure policies.
    SeededRandom,
}

/// A scripted best response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseScript {
    Policy(u64),
    /// One above the largest canonical index in the opponent's meta-Nash
    /// support, capped at the largest index.
    MaxSupportPlusOne,
}

/// Scripted choices for one iteration; `None` fields fall back to the
/// lexicographic rule.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub meta_nash: Option<[Weighted; 2]>,
    pub responses: [Option<ResponseScript>; 2],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Iteration `t` (from 1) uses `steps[t - 1]`.
    pub steps: Vec<ScheduleStep>,
    /// Used once `steps` is exhausted.
    pub tail: Option<ScheduleStep>,
}

impl Schedule {
    pub fn step(&self, iteration: usize) -> Option<&ScheduleStep> {
        iteration
            .checked_sub(1)
            .and_then(|i| self.steps.get(i))
            .or(self.tail.as_ref())
    }

    /// The same responses for every iteration.
    pub fn every_iteration(responses: [Option<ResponseScript>; 2]) -> Schedule {
        Schedule {
            steps: Vec::new(),
            tail: Some(ScheduleStep {
                meta_nash: None,
                responses,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiebreakPolicy {
    pub meta_nash: MetaNashMode,
    pub best_response: ResponseMode,
    pub init: InitMode,
    pub seed: u64,
    #[serde(default)]
    pub schedule: Schedule,
}

impl TiebreakPolicy {
    pub fn lexicographic(init: [u64; 2]) -> Self {
        TiebreakPolicy {
            meta_nash: MetaNashMode::Lexicographic,
            best_response: ResponseMode::Lexicographic,
            init: InitMode::Given(init),
            seed: 0,
            schedule: Schedule::default(),
        }
    }

    pub fn unique_or_fail(init: [u64; 2]) -> Self {
        TiebreakPolicy {
            meta_nash: MetaNashMode::UniqueOrFail,
            best_response: ResponseMode::UniqueOrFail,
            ..TiebreakPolicy::lexicographic(init)
        }
    }

    pub fn scripted(init: [u64; 2], schedule: Schedule) -> Self {
        TiebreakPolicy {
            meta_nash: MetaNashMode::Scripted,
            best_response: ResponseMode::Scripted,
            init: InitMode::Given(init),
            seed: 0,
            schedule,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error(transparent)]
    Game(#[from] PosgError),
    #[error(transparent)]
    Response(#[from] ResponseError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error("iteration {iteration}: illegal scripted meta-Nash: {reason}")]
    IllegalScriptedMetaNash { iteration: usize, reason: String },
    #[error("iteration {iteration}: illegal scripted best response for {player}: {reason}")]
    IllegalScriptedBestResponse {
        iteration: usize,
        player: Player,
        reason: String,
    },
    #[error("iteration {iteration}: {what} is not unique")]
    UniquenessViolation { iteration: usize, what: String },
    #[error("no convergence within {0} iterations")]
    MaxItersExceeded(usize),
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
}

impl RunError {
    /// True for failures of a scripted choice's certification.
    pub fn is_legality_failure(&self) -> bool {
        matches!(
            self,
            RunError::IllegalScriptedMetaNash { .. } | RunError::IllegalScriptedBestResponse { .. }
        )
    }
}

/// A failed run together with every iteration completed before the failure.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{error}")]
pub struct RunFailure {
    pub error: RunError,
    pub trace: RunTrace,
}

/// Default iteration cap for family runs: `4 * 2^k`.
pub fn default_max_iters(k: usize) -> usize {
    4usize.saturating_mul(1usize.checked_shl(k as u32).unwrap_or(usize::MAX))
}
