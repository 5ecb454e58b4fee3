//! Scripted and unique-choice lower-bound runs with their predicates.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use dolab::dynamics::{default_max_iters, Choice, IterationRecord, Weighted};
use dolab::equilibrium::verify_equilibrium;
use dolab::families::{encode_policy, tiebreak_for_theorem, FamilyId, Theorem};
use dolab::rational::{format_q, one, q};
use dolab::response::ExactOracle;
use dolab::{MixedPolicy, Player, Posg, Q};

use crate::config::{theorem_eps, Algo, ExperimentConfig, GameSource, InitSpec, LoadedGame};
use crate::error::CliError;
use crate::run::run_trial;
use crate::trace::{Failure, FailureClass, TraceFile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictKind {
    Pass,
    /// A predicate does not hold.
    Fail,
    /// A scripted choice failed its certification.
    Illegal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub theorem: Theorem,
    pub k: usize,
    pub verdict: VerdictKind,
    pub iterations: Option<usize>,
    pub records: usize,
    pub first_failure: Option<String>,
    pub legality: Option<Failure>,
    pub predicates: Vec<Predicate>,
}

#[derive(Default)]
struct Checks(Vec<Predicate>);

impl Checks {
    fn check(&mut self, name: &str, passed: bool) {
        self.0.push(Predicate {
            name: name.to_string(),
            passed,
            detail: None,
        });
    }

    /// Checks `holds` on every record and names the first offender.
    fn every(&mut self, name: &str, records: &[IterationRecord], holds: impl Fn(&IterationRecord) -> bool) {
        let bad = records.iter().find(|r| !holds(r));
        self.0.push(Predicate {
            name: name.to_string(),
            passed: bad.is_none(),
            detail: bad.map(|r| format!("iteration {}", r.iteration)),
        });
    }
}

/// The configuration a theorem's run uses at `k`.
pub fn theorem_config(theorem: Theorem, k: usize) -> Result<ExperimentConfig, CliError> {
    let tb = tiebreak_for_theorem(theorem, k).map_err(|e| CliError::Usage(e.to_string()))?;
    let max_iters = match theorem {
        // the bound: no convergence within 2^(k-1) iterations
        Theorem::T5 => 1usize << (k - 1),
        _ => default_max_iters(k),
    };
    Ok(ExperimentConfig {
        game: GameSource::Family {
            family: theorem.family(),
            k,
        },
        algo: Algo::Do,
        eps: theorem_eps(theorem, k),
        alpha: None,
        init: InitSpec::Schedule,
        meta_nash: tb.meta_nash,
        best_response: tb.best_response,
        schedule: Some(theorem),
        seeds: vec![0],
        max_iters,
    })
}

fn full(set: &[u64], k: usize) -> bool {
    set.len() == 1 << k
}

fn pennies_equilibrium(game: &Posg, k: usize) -> Result<(bool, Q), CliError> {
    let n = 1u64 << k;
    let enc = |p, x| encode_policy(FamilyId::MatchingPenniesChain, k, p, x).map_err(|e| CliError::Usage(e.to_string()));
    let half = q(1, 2);
    let m1 = MixedPolicy::new(Player::One, vec![(enc(Player::One, n / 2 - 1)?, half.clone()), (enc(Player::One, n - 1)?, half.clone())]);
    let m2 = MixedPolicy::new(Player::Two, vec![(enc(Player::Two, 0)?, half.clone()), (enc(Player::Two, n / 2)?, half)]);
    let (m1, m2) = (m1.map_err(run_err)?, m2.map_err(run_err)?);
    let cert = verify_equilibrium(game, &m1, &m2, &Q::zero(), &ExactOracle).map_err(run_err)?;
    let value = game.evaluate_mixed(&m1, &m2).map_err(run_err)?[0].clone();
    Ok((cert.passed, value))
}

fn run_err(e: impl Into<dolab::dynamics::RunError>) -> CliError {
    CliError::Run(e.into())
}

fn predicates(theorem: Theorem, k: usize, trace: &TraceFile, game: &Posg) -> Result<Vec<Predicate>, CliError> {
    let mut c = Checks::default();
    let run = trace.run_trace().expect("double oracle trace");
    let records = &run.records;
    let converged = trace.failure.is_none() && run.outcome.as_ref().is_some_and(|o| o.converged);
    let body = &records[..records.len().saturating_sub(1)];
    let n = 1u64 << k;
    match theorem {
        Theorem::T1 => {
            c.check("converges to gap 0", converged && records.last().is_some_and(|r| r.gap.is_zero()));
            c.check(
                "final supports hold all 2^k strings",
                records.last().is_some_and(|r| full(&r.policy_sets[0], k) && full(&r.policy_sets[1], k)),
            );
            c.every("gap positive before the final iteration", body, |r| r.gap > Q::zero());
            let odd: Vec<IterationRecord> = records.iter().skip(2).step_by(2).cloned().collect();
            c.every("gap after 2t iterations at most 2/t", &odd, |r| r.gap <= q(2, (r.iteration / 2) as i64));
        }
        Theorem::T2 => {
            c.check(
                "completes without a uniqueness violation",
                trace.failure.as_ref().map_or(converged, |f| f.class != FailureClass::Uniqueness),
            );
            c.every("meta-Nash unique every iteration", records, |r| r.meta_nash_unique == Some(true));
            c.every("one best response per player every iteration", records, |r| {
                r.response_counts.iter().all(|n| n == "1")
            });
            c.every("largest index grows by at most one", records, |r| r.max_index[1] <= r.max_index[0] + 1);
        }
        Theorem::T3 => {
            c.check("converges", converged);
            c.check("takes 2^k - 1 iterations", run.iterations() == Some(n as usize - 1));
            c.every("every response scripted and certified", body, |r| r.response_choices == [Choice::Scripted; 2]);
        }
        Theorem::T4 => {
            c.check("converges", converged);
            c.check("takes 2^k - 1 iterations", run.iterations() == Some(n as usize - 1));
            c.every("gap 1/k before the final iteration", body, |r| r.gap == q(1, k as i64));
            c.every("every meta-Nash scripted and certified", body, |r| r.meta_nash_choice == Choice::Scripted);
        }
        Theorem::T5 => {
            let half = (n / 2) as usize;
            c.check(
                "no convergence within 2^(k-1) iterations",
                records.len() == half && trace.failure.as_ref().is_some_and(|f| f.class == FailureClass::MaxIters),
            );
            c.every("gap 2/k every iteration", records, |r| r.gap == q(2, k as i64));
            c.every("P1 response t-1 certified", records, |r| {
                r.responses[0] == r.iteration as u64 - 1 && r.response_choices[0] == Choice::Scripted
            });
            c.every("P2 response t certified", &records[..records.len().min(half - 1)], |r| {
                r.responses[1] == r.iteration as u64 && r.response_choices[1] == Choice::Scripted
            });
            c.every("policy sets before iteration t", records, |r| {
                let t = r.iteration as u64;
                let p1: Vec<u64> = std::iter::once(n - 1).chain(0..t - 1).collect();
                let p2: Vec<u64> = (0..t).collect();
                r.policy_sets == [p1, p2]
            });
            c.every("(2^k - 1, t - 1) certified meta-Nash", records, |r| {
                r.meta_nash_choice == Choice::Scripted
                    && r.meta_nash == [Weighted::pure(n - 1), Weighted::pure(r.iteration as u64 - 1)]
                    && r.meta_improvements.iter().all(Zero::is_zero)
            });
            let (passed, value) = pennies_equilibrium(game, k)?;
            c.check("support-2 profile is an exact equilibrium", passed);
            c.0.push(Predicate {
                name: "equilibrium value 1 - 1/k".into(),
                passed: value == one() - q(1, k as i64),
                detail: Some(format_q(&value)),
            });
        }
    }
    Ok(c.0)
}

/// Runs the theorem's configuration at `k` and checks its predicates.
pub fn verify_theorem(theorem: Theorem, k: usize) -> Result<(Verdict, TraceFile), CliError> {
    let config = theorem_config(theorem, k)?;
    let loaded = LoadedGame::load(&config.game)?;
    let trace = run_trial(&config, &loaded, 0)?;
    let legality = trace.failure.clone().filter(|f| f.class == FailureClass::Legality);
    let predicates = if legality.is_some() {
        Vec::new()
    } else {
        predicates(theorem, k, &trace, &loaded.game)?
    };
    let first_failure = match &legality {
        Some(f) => Some(f.message.clone()),
        None => predicates.iter().find(|p| !p.passed).map(|p| match &p.detail {
            Some(d) => format!("{} ({d})", p.name),
            None => p.name.clone(),
        }),
    };
    let verdict = match (&legality, &first_failure) {
        (Some(_), _) => VerdictKind::Illegal,
        (None, Some(_)) => VerdictKind::Fail,
        (None, None) => VerdictKind::Pass,
    };
    let records = match &trace.body {
        crate::trace::Body::DoubleOracle { records, .. } => records.len(),
        _ => 0,
    };
    let verdict = Verdict {
        theorem,
        k,
        verdict,
        iterations: trace.iterations(),
        records,
        first_failure,
        legality,
        predicates,
    };
    Ok((verdict, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases_pass() {
        for t in Theorem::ALL {
            let (v, _) = verify_theorem(t, 2).unwrap();
            assert_eq!(v.verdict, VerdictKind::Pass, "{t}: {:?}", v.first_failure);
        }
    }

    #[test]
    fn theorem_configs_use_scripted_modes() {
        let c = theorem_config(Theorem::T5, 3).unwrap();
        assert_eq!(c.max_iters, 4);
        assert_eq!(c.meta_nash, dolab::dynamics::MetaNashMode::Scripted);
        assert_eq!(theorem_config(Theorem::T2, 3).unwrap().meta_nash, dolab::dynamics::MetaNashMode::UniqueOrFail);
    }
}
