//! Experiment harness for exact double oracle runs: configuration, trace
//! files, seeded sweeps, lower-bound verification and summary reports.

pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod sweep;
pub mod trace;
pub mod verify;

use dolab::families::{generate, FamilyId};
use dolab::game_format::write_game;

use crate::error::CliError;

/// The canonical text form of a family member.
pub fn generate_game(family: &str, k: usize) -> Result<String, CliError> {
    let family: FamilyId = family.parse().map_err(|e: dolab::families::FamilyError| CliError::Usage(e.to_string()))?;
    let game = generate(family, k).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(write_game(&game))
}
