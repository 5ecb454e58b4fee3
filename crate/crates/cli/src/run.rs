use std::fmt::Write as _;

use dolab::dynamics::{
    run_alpha_double_oracle, run_best_response_dynamics, run_double_oracle, Choice, InitMode, RunTrace,
};
use dolab::rational::format_q;

use crate::config::{Algo, ExperimentConfig, LoadedGame};
use crate::error::CliError;
use crate::trace::{Body, Failure, GameInfo, Header, TraceFile, FORMAT};

pub fn game_info(loaded: &LoadedGame) -> GameInfo {
    GameInfo {
        label: loaded.label.clone(),
        family: loaded.family,
        k: loaded.k,
        policies: loaded.policy_counts(),
        zero_sum: loaded.game.is_zero_sum(),
        fully_observable: loaded.game.is_fully_observable(),
        tree_form: loaded.game.is_tree_form(),
    }
}

/// Runs one seeded trial. Run errors end up in the trace's failure line;
/// only setup problems are returned as errors.
pub fn run_trial(config: &ExperimentConfig, loaded: &LoadedGame, seed: u64) -> Result<TraceFile, CliError> {
    let tb = config.tiebreak(loaded, seed)?;
    let fallback_init = match tb.init {
        InitMode::Given(i) => i,
        InitMode::SeededRandom => [0, 0],
    };
    let game = &loaded.game;
    let (init, body, failure) = match config.algo {
        Algo::Do | Algo::AlphaDo => {
            let result = match &config.alpha {
                Some(alpha) => run_alpha_double_oracle(game, &config.eps, alpha, &tb, config.max_iters),
                None => run_double_oracle(game, &config.eps, &tb, config.max_iters),
            };
            let (trace, failure): (RunTrace, _) = match result {
                Ok(t) => (t, None),
                Err(f) => (f.trace, Some(Failure::from_error(&f.error))),
            };
            let body = Body::DoubleOracle {
                records: trace.records,
                outcome: trace.outcome,
            };
            (trace.init, body, failure)
        }
        Algo::Fp => match dolab::dynamics::run_fictitious_play(game, config.max_iters, &tb) {
            Ok(t) => (t.init, Body::Fp { records: t.records }, None),
            Err(e) => (fallback_init, Body::Fp { records: Vec::new() }, Some(Failure::from_error(&e))),
        },
        Algo::Brd => match run_best_response_dynamics(game, config.max_iters, &tb) {
            Ok(t) => (
                t.init,
                Body::Brd {
                    records: t.records,
                    converged_after: t.converged_after,
                    cycle: t.cycle,
                },
                None,
            ),
            Err(e) => (
                fallback_init,
                Body::Brd {
                    records: Vec::new(),
                    converged_after: None,
                    cycle: None,
                },
                Some(Failure::from_error(&e)),
            ),
        },
    };
    Ok(TraceFile {
        header: Header {
            format: FORMAT.to_string(),
            config: config.clone(),
            seed,
            init,
            game: game_info(loaded),
        },
        body,
        failure,
    })
}

fn certified_choices(trace: &TraceFile) -> usize {
    match &trace.body {
        Body::DoubleOracle { records, .. } => records
            .iter()
            .map(|r| {
                let meta = usize::from(r.meta_nash_choice == Choice::Scripted);
                meta + r.response_choices.iter().filter(|c| **c == Choice::Scripted).count()
            })
            .sum(),
        Body::Fp { records } => records
            .iter()
            .map(|r| r.response_choices.iter().filter(|c| **c == Choice::Scripted).count())
            .sum(),
        Body::Brd { records, .. } => records
            .iter()
            .map(|r| r.choices.iter().filter(|c| **c == Choice::Scripted).count())
            .sum(),
    }
}

/// Human summary of one trial.
pub fn summary(trace: &TraceFile) -> String {
    let h = &trace.header;
    let mut out = String::new();
    let k = h.game.k.map_or(String::new(), |k| format!(" k={k}"));
    let _ = writeln!(out, "game: {}{k}, start ({}, {}), seed {}", h.game.label, h.init[0], h.init[1], h.seed);
    let alpha = h.config.alpha.as_ref().map_or(String::new(), |a| format!(", alpha {}", format_q(a)));
    let _ = writeln!(out, "algorithm: {}, eps {}{alpha}", h.config.algo.name(), format_q(&h.config.eps));
    match &trace.body {
        Body::DoubleOracle { records, outcome } => {
            for r in records {
                for (p, gated) in r.gated.iter().enumerate() {
                    if *gated {
                        let _ = writeln!(
                            out,
                            "iteration {}: P{} addition gated (improvement {})",
                            r.iteration,
                            p + 1,
                            format_q(&r.improvements[p])
                        );
                    }
                }
            }
            if let Some(o) = outcome {
                let state = if o.stalled { ", stalled" } else { "" };
                let _ = writeln!(out, "final gap: {}{state}", format_q(&o.final_gap));
            } else if let Some(r) = records.last() {
                let _ = writeln!(out, "last gap: {} at iteration {}", format_q(&r.gap), r.iteration);
            }
        }
        Body::Fp { records } => {
            if let Some(r) = records.last() {
                let _ = writeln!(out, "exploitability after round {}: {}", r.round, format_q(&r.exploitability));
            }
        }
        Body::Brd { cycle, .. } => {
            if let Some((start, len)) = cycle {
                let _ = writeln!(out, "cycle of length {len} from round {start}");
            }
        }
    }
    let certified = certified_choices(trace);
    match (&trace.failure, trace.iterations()) {
        (Some(f), _) => {
            let _ = writeln!(out, "failed: {}", f.message);
            if f.class == crate::trace::FailureClass::Legality {
                let _ = writeln!(out, "schedule blocked at iteration {}", f.iteration.unwrap_or(0));
            }
        }
        (None, Some(n)) => {
            let _ = writeln!(out, "iterations: {n}, all certificates passed");
            if certified > 0 {
                let _ = writeln!(out, "scripted choices certified: {certified}");
            }
            if let Body::DoubleOracle { records, .. } = &trace.body {
                let unique = records.iter().filter(|r| r.meta_nash_unique == Some(true)).count();
                if unique > 0 {
                    let _ = writeln!(out, "unique meta-Nash at {unique} of {} iterations", records.len());
                }
            }
        }
        (None, None) => {
            let _ = writeln!(out, "no convergence within {} rounds", h.config.max_iters);
        }
    }
    out
}
