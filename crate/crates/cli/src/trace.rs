//! Trace files: one JSON object per line. A header line with the resolved
//! config comes first, then one line per iteration (or round), then the
//! outcome or the failure.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use dolab::dynamics::{BrdRecord, BrdTrace, FpRecord, FpTrace, IterationRecord, Outcome, RunError, RunTrace};
use dolab::families::FamilyId;
use dolab::rational::format_q;

use crate::config::{Algo, ExperimentConfig};
use crate::error::CliError;

pub const FORMAT: &str = "dolab-trace/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameInfo {
    pub label: String,
    pub family: Option<FamilyId>,
    pub k: Option<usize>,
    pub policies: [u64; 2],
    pub zero_sum: bool,
    pub fully_observable: bool,
    pub tree_form: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub init: [u64; 2],
    pub game: GameInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureClass {
    Legality,
    Uniqueness,
    MaxIters,
    Config,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub class: FailureClass,
    pub iteration: Option<usize>,
    pub message: String,
}

impl Failure {
    pub fn from_error(e: &RunError) -> Self {
        let (class, iteration) = match e {
            RunError::IllegalScriptedMetaNash { iteration, .. } | RunError::IllegalScriptedBestResponse { iteration, .. } => {
                (FailureClass::Legality, Some(*iteration))
            }
            RunError::UniquenessViolation { iteration, .. } => (FailureClass::Uniqueness, Some(*iteration)),
            RunError::MaxItersExceeded(_) => (FailureClass::MaxIters, None),
            RunError::InvalidConfig(_) => (FailureClass::Config, None),
            _ => (FailureClass::Other, None),
        };
        Failure {
            class,
            iteration,
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        use crate::error::*;
        match self.class {
            FailureClass::Legality => EXIT_LEGALITY,
            FailureClass::Uniqueness => EXIT_PREDICATE,
            FailureClass::Config => EXIT_USAGE,
            FailureClass::MaxIters | FailureClass::Other => EXIT_OTHER,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    DoubleOracle {
        records: Vec<IterationRecord>,
        outcome: Option<Outcome>,
    },
    Fp {
        records: Vec<FpRecord>,
    },
    Brd {
        records: Vec<BrdRecord>,
        converged_after: Option<usize>,
        cycle: Option<(usize, usize)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub header: Header,
    pub body: Body,
    pub failure: Option<Failure>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum Line {
    Header(Header),
    Iteration(IterationRecord),
    Outcome(Outcome),
    Round(FpRecord),
    Step(BrdRecord),
    Stop {
        converged_after: Option<usize>,
        cycle: Option<(usize, usize)>,
    },
    Failure(Failure),
}

impl TraceFile {
    pub fn to_jsonl(&self) -> String {
        let mut lines = vec![Line::Header(self.header.clone())];
        match &self.body {
            Body::DoubleOracle { records, outcome } => {
                lines.extend(records.iter().cloned().map(Line::Iteration));
                lines.extend(outcome.clone().map(Line::Outcome));
            }
            Body::Fp { records } => lines.extend(records.iter().cloned().map(Line::Round)),
            Body::Brd {
                records,
                converged_after,
                cycle,
            } => {
                lines.extend(records.iter().cloned().map(Line::Step));
                if self.failure.is_none() {
                    lines.push(Line::Stop {
                        converged_after: *converged_after,
                        cycle: *cycle,
                    });
                }
            }
        }
        lines.extend(self.failure.clone().map(Line::Failure));
        let mut out = String::new();
        for line in &lines {
            out.push_str(&serde_json::to_string(line).expect("trace lines serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, String> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let parse = |n: usize, l: &str| serde_json::from_str::<Line>(l).map_err(|e| format!("line {}: {e}", n + 1));
        let header = match lines.next() {
            Some((n, l)) => match parse(n, l)? {
                Line::Header(h) => h,
                _ => return Err("first line is not a header".into()),
            },
            None => return Err("empty trace".into()),
        };
        if header.format != FORMAT {
            return Err(format!("unsupported trace format `{}`", header.format));
        }
        let mut body = match header.config.algo {
            Algo::Do | Algo::AlphaDo => Body::DoubleOracle {
                records: Vec::new(),
                outcome: None,
            },
            Algo::Fp => Body::Fp { records: Vec::new() },
            Algo::Brd => Body::Brd {
                records: Vec::new(),
                converged_after: None,
                cycle: None,
            },
        };
        let mut failure = None;
        for (n, l) in lines {
            if failure.is_some() {
                return Err(format!("line {}: content after the failure line", n + 1));
            }
            match (parse(n, l)?, &mut body) {
                (Line::Iteration(r), Body::DoubleOracle { records, outcome: None }) => records.push(r),
                (Line::Outcome(o), Body::DoubleOracle { outcome: outcome @ None, .. }) => *outcome = Some(o),
                (Line::Round(r), Body::Fp { records }) => records.push(r),
                (Line::Step(r), Body::Brd { records, .. }) => records.push(r),
                (
                    Line::Stop {
                        converged_after: c,
                        cycle: y,
                    },
                    Body::Brd {
                        converged_after, cycle, ..
                    },
                ) => {
                    *converged_after = c;
                    *cycle = y;
                }
                (Line::Failure(f), _) => failure = Some(f),
                _ => return Err(format!("line {}: unexpected record for algorithm {}", n + 1, header.config.algo.name())),
            }
        }
        Ok(TraceFile { header, body, failure })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        TraceFile::from_jsonl(&text).map_err(|message| CliError::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(path, self.to_jsonl()).map_err(|e| CliError::io(path, e))
    }

    /// The double oracle trace, for double oracle runs.
    pub fn run_trace(&self) -> Option<RunTrace> {
        match &self.body {
            Body::DoubleOracle { records, outcome } => Some(RunTrace {
                algorithm: self.header.config.algo.name().to_string(),
                eps: self.header.config.eps.clone(),
                alpha: self.header.config.alpha.as_ref().map(format_q),
                init: self.header.init,
                records: records.clone(),
                outcome: outcome.clone(),
            }),
            _ => None,
        }
    }

    pub fn fp_trace(&self) -> Option<FpTrace> {
        match &self.body {
            Body::Fp { records } => Some(FpTrace {
                init: self.header.init,
                records: records.clone(),
            }),
            _ => None,
        }
    }

    pub fn brd_trace(&self) -> Option<BrdTrace> {
        match &self.body {
            Body::Brd {
                records,
                converged_after,
                cycle,
            } => Some(BrdTrace {
                init: self.header.init,
                records: records.clone(),
                converged_after: *converged_after,
                cycle: *cycle,
            }),
            _ => None,
        }
    }

    /// Iterations (double oracle) or rounds (fp, brd) to the stopping point;
    /// `None` if the run failed or never stopped.
    pub fn iterations(&self) -> Option<usize> {
        if self.failure.is_some() {
            return None;
        }
        match &self.body {
            Body::DoubleOracle { outcome, .. } => outcome.as_ref().map(|o| o.iterations),
            Body::Fp { .. } => self.fp_trace().and_then(|t| t.first_zero_round()),
            Body::Brd { converged_after, .. } => *converged_after,
        }
    }

    /// Largest canonical index in the start profile.
    pub fn start_max_index(&self) -> u64 {
        self.header.init[0].max(self.header.init[1])
    }
}
