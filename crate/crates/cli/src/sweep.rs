use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use dolab::rational::{format_q, to_f64};
use dolab::Q;

use crate::config::{ExperimentConfig, LoadedGame};
use crate::error::CliError;
use crate::run::run_trial;
use crate::trace::{Failure, TraceFile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub seed: u64,
    pub init: [u64; 2],
    /// Largest canonical index of the start profile.
    pub start_max_index: u64,
    pub iterations: Option<usize>,
    pub failure: Option<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub game: String,
    pub k: Option<usize>,
    pub algo: String,
    pub trials: Vec<Trial>,
    pub completed: usize,
    /// Exact mean iteration count over completed trials.
    pub mean: Option<String>,
    pub mean_approx: Option<f64>,
    pub min: Option<usize>,
    pub max: Option<usize>,
    /// How often each start maximum occurred.
    pub start_distribution: BTreeMap<u64, usize>,
}

impl SweepSummary {
    pub fn from_traces(traces: &[TraceFile]) -> Self {
        let trials: Vec<Trial> = traces
            .iter()
            .map(|t| Trial {
                seed: t.header.seed,
                init: t.header.init,
                start_max_index: t.start_max_index(),
                iterations: t.iterations(),
                failure: t.failure.clone(),
            })
            .collect();
        let counts: Vec<usize> = trials.iter().filter_map(|t| t.iterations).collect();
        let mean = (!counts.is_empty()).then(|| {
            let total: usize = counts.iter().sum();
            Q::new((total as i64).into(), (counts.len() as i64).into())
        });
        let mut start_distribution = BTreeMap::new();
        for t in &trials {
            *start_distribution.entry(t.start_max_index).or_insert(0) += 1;
        }
        let first = traces.first().map(|t| &t.header);
        SweepSummary {
            game: first.map_or(String::new(), |h| h.game.label.clone()),
            k: first.and_then(|h| h.game.k),
            algo: first.map_or(String::new(), |h| h.config.algo.name().to_string()),
            completed: counts.len(),
            mean: mean.as_ref().map(format_q),
            mean_approx: mean.as_ref().map(to_f64),
            min: counts.iter().copied().min(),
            max: counts.iter().copied().max(),
            start_distribution,
            trials,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = (&Trial, &Failure)> {
        self.trials.iter().filter_map(|t| t.failure.as_ref().map(|f| (t, f)))
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        let k = self.k.map_or(String::new(), |k| format!(" k={k}"));
        out.push_str(&format!("sweep: {}{k}, {}, {} trials\n", self.game, self.algo, self.trials.len()));
        out.push_str("seed,start_p1,start_p2,start_max,iterations,failure\n");
        for t in &self.trials {
            let iters = t.iterations.map_or(String::new(), |n| n.to_string());
            let fail = t.failure.as_ref().map_or(String::new(), |f| f.message.replace(',', ";"));
            out.push_str(&format!("{},{},{},{},{iters},{fail}\n", t.seed, t.init[0], t.init[1], t.start_max_index));
        }
        match (&self.mean, self.mean_approx, self.min, self.max) {
            (Some(m), Some(a), Some(lo), Some(hi)) => {
                out.push_str(&format!("mean {m} ({a:.4}), min {lo}, max {hi} over {} completed\n", self.completed))
            }
            _ => out.push_str("no completed trials\n"),
        }
        let failed = self.trials.len() - self.completed;
        if failed > 0 {
            out.push_str(&format!("{failed} trials failed or did not converge\n"));
        }
        out
    }
}

/// Runs every seed as an independent trial; results come back in seed-list
/// order whatever the thread count.
pub fn run_sweep(config: &ExperimentConfig, loaded: &LoadedGame, jobs: Option<usize>) -> Result<Vec<TraceFile>, CliError> {
    if config.seeds.len() < 2 {
        return Err(CliError::Usage("sweep needs at least 2 seeds".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| {
        config
            .seeds
            .par_iter()
            .map(|&seed| run_trial(config, loaded, seed))
            .collect::<Result<Vec<_>, _>>()
    })
}
