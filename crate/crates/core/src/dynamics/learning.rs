use std::collections::{BTreeMap, HashMap};

use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::double_oracle::{choose_response, initial_policies};
use super::trace::{Choice, Weighted};
use super::{RunError, TiebreakPolicy};
use crate::posg::{MixedPolicy, Player, Posg, PurePolicy};
use crate::rational::{qpair, qser, Q};
use crate::response::{value_against, ResponseTree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpRecord {
    pub round: usize,
    /// Empirical averages of all responses played before this round.
    pub averages: [Weighted; 2],
    #[serde(with = "qpair")]
    pub values: [Q; 2],
    #[serde(with = "qpair")]
    pub improvements: [Q; 2],
    /// Sum of both improvements against the averages.
    #[serde(with = "qser")]
    pub exploitability: Q,
    /// Responses to the averages, played next round.
    pub responses: [u64; 2],
    pub response_choices: [Choice; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpTrace {
    pub init: [u64; 2],
    pub records: Vec<FpRecord>,
}

impl FpTrace {
    pub fn first_zero_round(&self) -> Option<usize> {
        self.records.iter().find(|r| r.exploitability.is_zero()).map(|r| r.round)
    }

    pub fn final_averages(&self) -> Option<&[Weighted; 2]> {
        self.records.last().map(|r| &r.averages)
    }
}

struct Tally {
    player: Player,
    counts: BTreeMap<u64, (PurePolicy, u64)>,
    total: u64,
}

impl Tally {
    fn new(player: Player) -> Self {
        Tally {
            player,
            counts: BTreeMap::new(),
            total: 0,
        }
    }

    fn add(&mut self, index: u64, policy: &PurePolicy) {
        self.counts.entry(index).or_insert_with(|| (policy.clone(), 0)).1 += 1;
        self.total += 1;
    }

    fn weight(&self, count: u64) -> Q {
        Q::new((count as i64).into(), (self.total as i64).into())
    }

    fn mixed(&self) -> MixedPolicy {
        let support = self.counts.values().map(|(p, c)| (p.clone(), self.weight(*c))).collect();
        MixedPolicy::new(self.player, support).expect("empirical frequencies form a distribution")
    }

    fn weighted(&self) -> Weighted {
        Weighted(self.counts.iter().map(|(i, (_, c))| (*i, self.weight(*c))).collect())
    }
}

/// Simultaneous fictitious play. Round `t` evaluates the uniform averages of
/// the `t` profiles played so far (the start profile included) and both
/// players respond to the other's average.
pub fn run_fictitious_play(game: &Posg, rounds: usize, tiebreak: &TiebreakPolicy) -> Result<FpTrace, RunError> {
    if rounds == 0 {
        return Err(RunError::InvalidConfig("fictitious play needs at least one round".into()));
    }
    let [p1, p2] = initial_policies(game, tiebreak)?;
    let init = [game.policy_index(&p1)?, game.policy_index(&p2)?];
    let mut tallies = [Tally::new(Player::One), Tally::new(Player::Two)];
    tallies[0].add(init[0], &p1);
    tallies[1].add(init[1], &p2);
    let mut rng = ChaCha8Rng::seed_from_u64(tiebreak.seed);
    rng.set_stream(1);
    let mut records = Vec::with_capacity(rounds);
    for round in 1..=rounds {
        let mixed = [tallies[0].mixed(), tallies[1].mixed()];
        let averages = [tallies[0].weighted(), tallies[1].weighted()];
        let values = game.evaluate_mixed(&mixed[0], &mixed[1])?;
        let mut chosen = Vec::with_capacity(2);
        for player in Player::BOTH {
            let o = player.other().index();
            chosen.push(choose_response(game, player, &mixed[o], &averages[o], tiebreak, round, &mut rng)?);
        }
        let improvements = [&chosen[0].value - &values[0], &chosen[1].value - &values[1]];
        let exploitability = &improvements[0] + &improvements[1];
        for player in Player::BOTH {
            let c = &chosen[player.index()];
            tallies[player.index()].add(c.index, &c.policy);
        }
        records.push(FpRecord {
            round,
            averages,
            values,
            improvements,
            exploitability,
            responses: [chosen[0].index, chosen[1].index],
            response_choices: [chosen[0].choice, chosen[1].choice],
        });
    }
    Ok(FpTrace { init, records })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrdRecord {
    pub round: usize,
    pub profile: [u64; 2],
    pub choices: [Choice; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrdTrace {
    pub init: [u64; 2],
    pub records: Vec<BrdRecord>,
    /// Round whose profile is a pure equilibrium (0 for the start profile).
    pub converged_after: Option<usize>,
    /// Earlier round whose profile recurred, and the cycle length.
    pub cycle: Option<(usize, usize)>,
}

impl BrdTrace {
    pub fn final_profile(&self) -> [u64; 2] {
        self.records.last().map_or(self.init, |r| r.profile)
    }
}

/// Pure best-response dynamics: each round both players respond to the
/// other's previous policy. Stops at a pure equilibrium, on a repeated
/// profile, or after `rounds` rounds.
pub fn run_best_response_dynamics(game: &Posg, rounds: usize, tiebreak: &TiebreakPolicy) -> Result<BrdTrace, RunError> {
    if rounds == 0 {
        return Err(RunError::InvalidConfig("best-response dynamics needs at least one round".into()));
    }
    let mut current = initial_policies(game, tiebreak)?;
    let init = [game.policy_index(&current[0])?, game.policy_index(&current[1])?];
    let mut seen = HashMap::from([(init, 0usize)]);
    let mut trace = BrdTrace {
        init,
        records: Vec::new(),
        converged_after: None,
        cycle: None,
    };
    let mut profile = init;
    let mut rng = ChaCha8Rng::seed_from_u64(tiebreak.seed);
    rng.set_stream(1);
    for round in 1..=rounds + 1 {
        let mixed = [MixedPolicy::pure(current[0].clone()), MixedPolicy::pure(current[1].clone())];
        if is_pure_equilibrium(game, &current, &mixed)? {
            trace.converged_after = Some(round - 1);
            break;
        }
        if round > rounds {
            break;
        }
        let mut chosen = Vec::with_capacity(2);
        for player in Player::BOTH {
            let o = player.other().index();
            let support = Weighted::pure(profile[o]);
            chosen.push(choose_response(game, player, &mixed[o], &support, tiebreak, round, &mut rng)?);
        }
        profile = [chosen[0].index, chosen[1].index];
        trace.records.push(BrdRecord {
            round,
            profile,
            choices: [chosen[0].choice, chosen[1].choice],
        });
        let [c1, c2]: [_; 2] = chosen.try_into().ok().expect("two responses");
        current = [c1.policy, c2.policy];
        if let Some(&earlier) = seen.get(&profile) {
            trace.cycle = Some((earlier, round - earlier));
            break;
        }
        seen.insert(profile, round);
    }
    Ok(trace)
}

fn is_pure_equilibrium(game: &Posg, current: &[PurePolicy; 2], mixed: &[MixedPolicy; 2]) -> Result<bool, RunError> {
    for player in Player::BOTH {
        let i = player.index();
        let opp = &mixed[player.other().index()];
        let best = ResponseTree::solve(game, player, opp)?.value().clone();
        if value_against(game, player, &current[i], opp)? != best {
            return Ok(false);
        }
    }
    Ok(true)
}
