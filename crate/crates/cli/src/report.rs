//! Summary table rebuilt from a directory of traces.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dolab::dynamics::{Choice, MetaNashMode, ResponseMode};
use dolab::rational::{format_q, max_q};
use dolab::Q;

use crate::config::InitSpec;
use crate::error::CliError;
use crate::trace::{Body, FailureClass, TraceFile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub game: String,
    pub k: Option<usize>,
    pub algo: String,
    pub init: String,
    pub meta_nash: String,
    pub best_response: String,
    pub eps: String,
    pub schedule: Option<String>,
    pub runs: usize,
    pub completed: usize,
    /// Set when every completed run took the same number of iterations.
    pub exact_iterations: Option<usize>,
    pub mean_iterations: Option<String>,
    pub min_iterations: Option<usize>,
    pub max_iterations: Option<usize>,
    pub first_gap: Option<String>,
    pub last_gap: Option<String>,
    pub max_gap: Option<String>,
    pub certified: usize,
    pub legality_failures: usize,
    pub uniqueness_failures: usize,
    pub zero_sum: bool,
    pub fully_observable: bool,
    pub tree_form: bool,
    /// Support sizes of the first run's converged profile (fp: of the final
    /// averages).
    pub support: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<Row>,
}

fn mode_name<T: Serialize>(mode: &T) -> String {
    serde_json::to_value(mode)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn init_name(init: &InitSpec) -> String {
    match init {
        InitSpec::Given([a, b]) => format!("{a};{b}"),
        InitSpec::Random => "random".into(),
        InitSpec::Schedule => "schedule".into(),
    }
}

type Key = (String, Option<usize>, String, String, String, String, String, Option<String>);

fn key(t: &TraceFile) -> Key {
    let c = &t.header.config;
    (
        t.header.game.label.clone(),
        t.header.game.k,
        c.algo.name().to_string(),
        init_name(&c.init),
        mode_name::<MetaNashMode>(&c.meta_nash),
        mode_name::<ResponseMode>(&c.best_response),
        format_q(&c.eps),
        c.schedule.map(|s| s.to_string()),
    )
}

fn gaps(t: &TraceFile) -> Vec<Q> {
    match &t.body {
        Body::DoubleOracle { records, .. } => records.iter().map(|r| r.gap.clone()).collect(),
        Body::Fp { records } => records.iter().map(|r| r.exploitability.clone()).collect(),
        Body::Brd { .. } => Vec::new(),
    }
}

fn certified(t: &TraceFile) -> usize {
    let scripted = |c: &Choice| *c == Choice::Scripted;
    match &t.body {
        Body::DoubleOracle { records, .. } => records
            .iter()
            .map(|r| usize::from(scripted(&r.meta_nash_choice)) + r.response_choices.iter().filter(|c| scripted(c)).count())
            .sum(),
        Body::Fp { records } => records.iter().map(|r| r.response_choices.iter().filter(|c| scripted(c)).count()).sum(),
        Body::Brd { records, .. } => records.iter().map(|r| r.choices.iter().filter(|c| scripted(c)).count()).sum(),
    }
}

fn support(t: &TraceFile) -> Option<[usize; 2]> {
    match &t.body {
        Body::DoubleOracle { outcome, .. } => outcome
            .as_ref()
            .filter(|o| o.converged)
            .map(|o| [o.final_profile[0].0.len(), o.final_profile[1].0.len()]),
        Body::Fp { records } => records.last().map(|r| [r.averages[0].0.len(), r.averages[1].0.len()]),
        Body::Brd { converged_after, .. } => converged_after.map(|_| [1, 1]),
    }
}

impl Report {
    pub fn from_traces(traces: &[TraceFile]) -> Report {
        let mut groups: BTreeMap<Key, Vec<&TraceFile>> = BTreeMap::new();
        for t in traces {
            groups.entry(key(t)).or_default().push(t);
        }
        let rows = groups
            .into_iter()
            .map(|((game, k, algo, init, meta_nash, best_response, eps, schedule), mut runs)| {
                runs.sort_by_key(|t| t.header.seed);
                let counts: Vec<usize> = runs.iter().filter_map(|t| t.iterations()).collect();
                let first = runs[0];
                let first_gaps = gaps(first);
                let all_gaps: Vec<Q> = runs.iter().flat_map(|t| gaps(t)).collect();
                let failures = |class| runs.iter().filter(|t| t.failure.as_ref().is_some_and(|f| f.class == class)).count();
                let info = &first.header.game;
                Row {
                    game,
                    k,
                    algo,
                    init,
                    meta_nash,
                    best_response,
                    eps,
                    schedule,
                    runs: runs.len(),
                    completed: counts.len(),
                    exact_iterations: counts.first().copied().filter(|c| counts.iter().all(|x| x == c)),
                    mean_iterations: (!counts.is_empty())
                        .then(|| format_q(&Q::new((counts.iter().sum::<usize>() as i64).into(), (counts.len() as i64).into()))),
                    min_iterations: counts.iter().copied().min(),
                    max_iterations: counts.iter().copied().max(),
                    first_gap: first_gaps.first().map(format_q),
                    last_gap: first_gaps.last().map(format_q),
                    max_gap: max_q(&all_gaps).as_ref().map(format_q),
                    certified: runs.iter().map(|t| certified(t)).sum(),
                    legality_failures: failures(FailureClass::Legality),
                    uniqueness_failures: failures(FailureClass::Uniqueness),
                    zero_sum: info.zero_sum,
                    fully_observable: info.fully_observable,
                    tree_form: info.tree_form,
                    support: support(first),
                }
            })
            .collect();
        Report { rows }
    }

    /// Reads every `*.jsonl` file directly inside `dir`, in name order.
    pub fn from_dir(dir: &Path) -> Result<Report, CliError> {
        let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        if paths.is_empty() {
            return Err(CliError::MissingTraces(dir.to_path_buf()));
        }
        paths.sort();
        let traces = paths.iter().map(|p| TraceFile::read(p)).collect::<Result<Vec<_>, _>>()?;
        Ok(Report::from_traces(&traces))
    }

    /// Comma-separated table, one row per configuration.
    pub fn csv(&self) -> String {
        let flag = |b: bool| if b { "yes" } else { "no" };
        let opt = |o: &Option<String>| o.clone().unwrap_or_default();
        let num = |o: Option<usize>| o.map_or(String::new(), |n| n.to_string());
        let mut out = String::from(
            "game,k,algo,init,meta_nash,best_response,eps,schedule,runs,completed,iterations,mean,min,max,\
             first_gap,last_gap,max_gap,certified,legality_failures,uniqueness_failures,ZS,FO,TF,support\n",
        );
        for r in &self.rows {
            let support = r.support.map_or(String::new(), |[a, b]| format!("{a}x{b}"));
            let fields = [
                r.game.clone(),
                num(r.k),
                r.algo.clone(),
                r.init.clone(),
                r.meta_nash.clone(),
                r.best_response.clone(),
                r.eps.clone(),
                opt(&r.schedule),
                r.runs.to_string(),
                r.completed.to_string(),
                num(r.exact_iterations),
                opt(&r.mean_iterations),
                num(r.min_iterations),
                num(r.max_iterations),
                opt(&r.first_gap),
                opt(&r.last_gap),
                opt(&r.max_gap),
                r.certified.to_string(),
                r.legality_failures.to_string(),
                r.uniqueness_failures.to_string(),
                flag(r.zero_sum).into(),
                flag(r.fully_observable).into(),
                flag(r.tree_form).into(),
                support,
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}
