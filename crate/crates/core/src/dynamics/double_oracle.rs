use std::collections::HashMap;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::trace::{Choice, IterationRecord, Outcome, RunTrace, Weighted};
use super::{InitMode, MetaNashMode, ResponseMode, ResponseScript, RunError, RunFailure, TiebreakPolicy};
use crate::equilibrium::{
    certify, first_nash_bimatrix, lexicographic_zero_sum, matrix_improvements, solve_zero_sum, uniqueness_from,
    enumerate_nash_bimatrix, EquilibriumResult,
};
use crate::normal_form::NormalFormGame;
use crate::posg::{MixedPolicy, Player, Posg, PurePolicy};
use crate::rational::{format_q, Q};
use crate::response::{value_against, ResponseTree};

/// Support-enumeration budget for general-sum meta-games.
const BIMATRIX_CAP: u64 = 5_000_000;

/// Restricted game over the policies found so far, with a payoff cache.
pub struct MetaGame<'g> {
    game: &'g Posg,
    sets: [Vec<(u64, PurePolicy)>; 2],
    payoffs: HashMap<(usize, usize), [Q; 2]>,
}

impl<'g> MetaGame<'g> {
    pub fn new(game: &'g Posg, init: [PurePolicy; 2]) -> Result<Self, RunError> {
        let [p1, p2] = init;
        let i1 = game.policy_index(&p1)?;
        let i2 = game.policy_index(&p2)?;
        Ok(MetaGame {
            game,
            sets: [vec![(i1, p1)], vec![(i2, p2)]],
            payoffs: HashMap::new(),
        })
    }

    pub fn indices(&self, player: Player) -> Vec<u64> {
        self.sets[player.index()].iter().map(|(i, _)| *i).collect()
    }

    pub fn position(&self, player: Player, index: u64) -> Option<usize> {
        self.sets[player.index()].iter().position(|(i, _)| *i == index)
    }

    pub fn max_index(&self) -> u64 {
        self.sets.iter().flatten().map(|(i, _)| *i).max().unwrap_or(0)
    }

    /// Adds a policy; false if it was already present.
    pub fn add(&mut self, player: Player, index: u64, policy: PurePolicy) -> bool {
        if self.position(player, index).is_some() {
            return false;
        }
        self.sets[player.index()].push((index, policy));
        true
    }

    pub fn normal_form(&mut self) -> Result<NormalFormGame, RunError> {
        let rows = self.sets[0].len();
        let cols = self.sets[1].len();
        for r in 0..rows {
            for c in 0..cols {
                if !self.payoffs.contains_key(&(r, c)) {
                    let v = self.game.evaluate_profile(&self.sets[0][r].1, &self.sets[1][c].1)?;
                    self.payoffs.insert((r, c), v);
                }
            }
        }
        let mut nfg = NormalFormGame::from_fn(rows, cols, |r, c| self.payoffs[&(r, c)].clone());
        nfg.set_labels(self.indices(Player::One), self.indices(Player::Two));
        if self.game.is_zero_sum() {
            nfg = nfg.into_zero_sum().expect("zero-sum game has zero-sum meta-games");
        }
        Ok(nfg)
    }

    pub fn mixed(&self, player: Player, dist: &[Q]) -> MixedPolicy {
        let support = self.sets[player.index()]
            .iter()
            .zip(dist)
            .filter(|(_, w)| !w.is_zero())
            .map(|((_, p), w)| (p.clone(), w.clone()))
            .collect();
        MixedPolicy::new(player, support).expect("meta-Nash strategies are distributions")
    }

    pub fn weighted(&self, player: Player, dist: &[Q]) -> Weighted {
        Weighted(
            self.sets[player.index()]
                .iter()
                .zip(dist)
                .filter(|(_, w)| !w.is_zero())
                .map(|((i, _), w)| (*i, w.clone()))
                .collect(),
        )
    }
}

pub(super) fn initial_policies(game: &Posg, tiebreak: &TiebreakPolicy) -> Result<[PurePolicy; 2], RunError> {
    match tiebreak.init {
        InitMode::Given([a, b]) => Ok([game.policy(Player::One, a)?, game.policy(Player::Two, b)?]),
        InitMode::SeededRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(tiebreak.seed);
            let mut pick = |player: Player| -> Result<PurePolicy, RunError> {
                let n = game
                    .domain(player)
                    .policy_count_u64()
                    .ok_or_else(|| RunError::InvalidConfig("policy count exceeds u64".into()))?;
                Ok(game.policy(player, rng.gen_range(0..n))?)
            };
            let p1 = pick(Player::One)?;
            let p2 = pick(Player::Two)?;
            Ok([p1, p2])
        }
    }
}

struct MetaChoice {
    result: EquilibriumResult,
    choice: Choice,
    unique: Option<bool>,
}

fn choose_meta_nash(
    meta: &MetaGame,
    nfg: &NormalFormGame,
    tiebreak: &TiebreakPolicy,
    iteration: usize,
) -> Result<MetaChoice, RunError> {
    let scripted = match tiebreak.meta_nash {
        MetaNashMode::Scripted => tiebreak.schedule.step(iteration).and_then(|s| s.meta_nash.as_ref()),
        _ => None,
    };
    if let Some(script) = scripted {
        return scripted_meta_nash(meta, nfg, script, iteration);
    }
    let fallback = tiebreak.meta_nash == MetaNashMode::Scripted;
    let unique_or_fail = tiebreak.meta_nash == MetaNashMode::UniqueOrFail;
    if nfg.is_zero_sum() {
        if unique_or_fail {
            let result = solve_zero_sum(nfg)?;
            let cert = uniqueness_from(nfg, &result);
            if !cert.unique {
                return Err(RunError::UniquenessViolation {
                    iteration,
                    what: "meta-Nash equilibrium".into(),
                });
            }
            return Ok(MetaChoice {
                result,
                choice: Choice::Unique,
                unique: Some(true),
            });
        }
        let order = |player: Player| {
            let idx = meta.indices(player);
            let mut pos: Vec<usize> = (0..idx.len()).collect();
            pos.sort_by_key(|&p| idx[p]);
            pos
        };
        let (o1, o2) = (order(Player::One), order(Player::Two));
        let result = lexicographic_zero_sum(nfg, [&o1, &o2])?;
        return Ok(MetaChoice {
            result,
            choice: if fallback { Choice::Fallback } else { Choice::Lexicographic },
            unique: None,
        });
    }
    let (rows, cols) = nfg.dims();
    let full = rows.max(cols);
    if unique_or_fail {
        let mut all = enumerate_nash_bimatrix(nfg, full, BIMATRIX_CAP)?;
        if all.len() != 1 {
            return Err(RunError::UniquenessViolation {
                iteration,
                what: "meta-Nash equilibrium".into(),
            });
        }
        return Ok(MetaChoice {
            result: all.pop().expect("one equilibrium"),
            choice: Choice::Unique,
            unique: Some(true),
        });
    }
    let result = first_nash_bimatrix(nfg, full, BIMATRIX_CAP)?.expect("every bimatrix game has an equilibrium");
    Ok(MetaChoice {
        result,
        choice: if fallback { Choice::Fallback } else { Choice::Lexicographic },
        unique: None,
    })
}

fn scripted_meta_nash(
    meta: &MetaGame,
    nfg: &NormalFormGame,
    script: &[Weighted; 2],
    iteration: usize,
) -> Result<MetaChoice, RunError> {
    let illegal = |reason: String| RunError::IllegalScriptedMetaNash { iteration, reason };
    let mut dists: [Vec<Q>; 2] = Default::default();
    for player in Player::BOTH {
        let mut dist = vec![Q::zero(); meta.sets[player.index()].len()];
        let mut total = Q::zero();
        for (index, w) in &script[player.index()].0 {
            let pos = meta
                .position(player, *index)
                .ok_or_else(|| illegal(format!("policy {index} of {player} is not in the meta-game")))?;
            if *w < Q::zero() {
                return Err(illegal(format!("negative weight on policy {index} of {player}")));
            }
            dist[pos] += w;
            total += w;
        }
        if !total.is_one() {
            return Err(illegal(format!("weights of {player} sum to {}", format_q(&total))));
        }
        dists[player.index()] = dist;
    }
    let [p, q] = dists;
    let (improvements, _) = matrix_improvements(nfg, &p, &q);
    for player in Player::BOTH {
        let gain = &improvements[player.index()];
        if !gain.is_zero() {
            return Err(illegal(format!("{player} gains {} by deviating inside the meta-game", format_q(gain))));
        }
    }
    Ok(MetaChoice {
        result: certify(nfg, p, q),
        choice: Choice::Scripted,
        unique: None,
    })
}

pub(super) struct ResponseChoice {
    pub policy: PurePolicy,
    pub index: u64,
    pub value: Q,
    pub count: String,
    pub choice: Choice,
}

pub(super) fn choose_response(
    game: &Posg,
    player: Player,
    opponent: &MixedPolicy,
    opponent_weighted: &Weighted,
    tiebreak: &TiebreakPolicy,
    iteration: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ResponseChoice, RunError> {
    let tree = ResponseTree::solve(game, player, opponent)?;
    let count = tree.count().to_string();
    let value = tree.value().clone();
    let (policy, choice) = match tiebreak.best_response {
        ResponseMode::UniqueOrFail => {
            if !tree.count().is_one() {
                return Err(RunError::UniquenessViolation {
                    iteration,
                    what: format!("best response of {player} ({count} optimal policies)"),
                });
            }
            (tree.lexicographic(), Choice::Unique)
        }
        ResponseMode::Lexicographic => (tree.lexicographic(), Choice::Lexicographic),
        ResponseMode::SeededRandom => (tree.sample(rng), Choice::Random),
        ResponseMode::Scripted => {
            let script = tiebreak
                .schedule
                .step(iteration)
                .and_then(|s| s.responses[player.index()]);
            match script {
                None => (tree.lexicographic(), Choice::Fallback),
                Some(script) => {
                    let index = match script {
                        ResponseScript::Policy(i) => i,
                        ResponseScript::MaxSupportPlusOne => {
                            let top = game
                                .domain(player)
                                .policy_count_u64()
                                .ok_or_else(|| RunError::InvalidConfig("policy count exceeds u64".into()))?
                                - 1;
                            (opponent_weighted.max_index().expect("nonempty support") + 1).min(top)
                        }
                    };
                    let illegal = |reason: String| RunError::IllegalScriptedBestResponse {
                        iteration,
                        player,
                        reason,
                    };
                    let candidate = game.policy(player, index).map_err(|e| illegal(e.to_string()))?;
                    let achieved = value_against(game, player, &candidate, opponent)?;
                    if achieved != value {
                        return Err(illegal(format!(
                            "policy {index} scores {}, best response value is {}",
                            format_q(&achieved),
                            format_q(&value)
                        )));
                    }
                    (candidate, Choice::Scripted)
                }
            }
        }
    };
    let index = game.policy_index(&policy)?;
    Ok(ResponseChoice {
        policy,
        index,
        value,
        count,
        choice,
    })
}

/// Double oracle: solve the meta-game, compute both best responses against
/// the meta-Nash, stop once the gap (sum of both players' improvements) is
/// at most `eps`, otherwise add both responses.
pub fn run_double_oracle(
    game: &Posg,
    eps: &Q,
    tiebreak: &TiebreakPolicy,
    max_iters: usize,
) -> Result<RunTrace, RunFailure> {
    run(game, eps, None, tiebreak, max_iters)
}

/// As [`run_double_oracle`], but a response is only added when its
/// player's improvement is at least `alpha`. The run halts, flagged as
/// stalled, on an iteration that adds nothing.
pub fn run_alpha_double_oracle(
    game: &Posg,
    eps: &Q,
    alpha: &Q,
    tiebreak: &TiebreakPolicy,
    max_iters: usize,
) -> Result<RunTrace, RunFailure> {
    if *alpha <= Q::zero() || alpha > eps {
        let trace = empty_trace(eps, Some(alpha), [0, 0]);
        return Err(RunFailure {
            error: RunError::InvalidConfig("alpha must satisfy 0 < alpha <= eps".into()),
            trace,
        });
    }
    run(game, eps, Some(alpha), tiebreak, max_iters)
}

fn empty_trace(eps: &Q, alpha: Option<&Q>, init: [u64; 2]) -> RunTrace {
    RunTrace {
        algorithm: if alpha.is_some() { "alpha-do" } else { "do" }.into(),
        eps: eps.clone(),
        alpha: alpha.map(format_q),
        init,
        records: Vec::new(),
        outcome: None,
    }
}

fn run(
    game: &Posg,
    eps: &Q,
    alpha: Option<&Q>,
    tiebreak: &TiebreakPolicy,
    max_iters: usize,
) -> Result<RunTrace, RunFailure> {
    let mut trace = empty_trace(eps, alpha, [0, 0]);
    match iterate(game, eps, alpha, tiebreak, max_iters, &mut trace) {
        Ok(()) => Ok(trace),
        Err(error) => Err(RunFailure { error, trace }),
    }
}

fn iterate(
    game: &Posg,
    eps: &Q,
    alpha: Option<&Q>,
    tiebreak: &TiebreakPolicy,
    max_iters: usize,
    trace: &mut RunTrace,
) -> Result<(), RunError> {
    if *eps < Q::zero() {
        return Err(RunError::InvalidConfig("eps must be nonnegative".into()));
    }
    let init = initial_policies(game, tiebreak)?;
    let mut meta = MetaGame::new(game, init)?;
    trace.init = [meta.indices(Player::One)[0], meta.indices(Player::Two)[0]];
    let mut rng = ChaCha8Rng::seed_from_u64(tiebreak.seed);
    rng.set_stream(1);
    let mut expanding = 0;
    for iteration in 1.. {
        if iteration > max_iters {
            return Err(RunError::MaxItersExceeded(max_iters));
        }
        let nfg = meta.normal_form()?;
        let chosen = choose_meta_nash(&meta, &nfg, tiebreak, iteration)?;
        let [p, q] = &chosen.result.strategies;
        let mixed = [meta.mixed(Player::One, p), meta.mixed(Player::Two, q)];
        let weighted = [meta.weighted(Player::One, p), meta.weighted(Player::Two, q)];
        let mut responses = Vec::with_capacity(2);
        for player in Player::BOTH {
            let o = player.other().index();
            responses.push(choose_response(
                game,
                player,
                &mixed[o],
                &weighted[o],
                tiebreak,
                iteration,
                &mut rng,
            )?);
        }
        let values = chosen.result.values.clone();
        let improvements = [&responses[0].value - &values[0], &responses[1].value - &values[1]];
        let gap = &improvements[0] + &improvements[1];
        let before = meta.max_index();
        let converged = gap <= *eps;
        let mut added = [false, false];
        let mut gated = [false, false];
        if !converged {
            for player in Player::BOTH {
                let i = player.index();
                if alpha.is_some_and(|a| improvements[i] < *a) {
                    gated[i] = true;
                    continue;
                }
                added[i] = meta.add(player, responses[i].index, responses[i].policy.clone());
            }
        }
        let policy_sets = [
            trace_sets(&nfg, Player::One),
            trace_sets(&nfg, Player::Two),
        ];
        trace.records.push(IterationRecord {
            iteration,
            policy_sets,
            meta_nash: weighted.clone(),
            meta_nash_choice: chosen.choice,
            meta_nash_unique: chosen.unique,
            meta_improvements: chosen.result.improvements.clone(),
            meta_values: values,
            responses: [responses[0].index, responses[1].index],
            response_choices: [responses[0].choice, responses[1].choice],
            response_counts: [responses[0].count.clone(), responses[1].count.clone()],
            response_values: [responses[0].value.clone(), responses[1].value.clone()],
            improvements,
            gap: gap.clone(),
            added,
            gated,
            max_index: [before, meta.max_index()],
        });
        let stalled = !converged && !added[0] && !added[1];
        if converged || stalled {
            if stalled && alpha.is_none() {
                // An exact best response outside a meta-Nash's support set
                // always improves, so plain double oracle always grows.
                return Err(RunError::InvalidConfig(format!(
                    "iteration {iteration} added no policy although the gap is {}",
                    format_q(&gap)
                )));
            }
            trace.outcome = Some(Outcome {
                iterations: expanding,
                converged,
                stalled,
                final_gap: gap,
                final_profile: weighted,
            });
            return Ok(());
        }
        expanding += 1;
    }
    unreachable!("the iteration loop only exits by returning")
}

fn trace_sets(nfg: &NormalFormGame, player: Player) -> Vec<u64> {
    nfg.labels(player).to_vec()
}
