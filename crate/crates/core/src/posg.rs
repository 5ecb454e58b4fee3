//! Two-player partially-observable stochastic games with DAG transitions.
//!
//! A [`Posg`] is built from a [`PosgSpec`] and is immutable afterwards. Pure
//! policies map the acting player's observation sequences to actions; only
//! sequences that can actually occur are part of a policy (see
//! [`PolicyDomain`]), so the number of pure policies of the binary-chain
//! families is exactly `2^k`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normal_form::NormalFormGame;
use crate::rational::{format_q, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    pub fn from_index(i: usize) -> Player {
        if i == 0 {
            Player::One
        } else {
            Player::Two
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.index() + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PosgError {
    #[error("transition row ({state}, {a1}, {a2}) sums to {total}, not 1")]
    NonStochasticTransition {
        state: usize,
        a1: usize,
        a2: usize,
        total: String,
    },
    #[error("start distribution sums to {0}, not 1")]
    NonStochasticStart(String),
    #[error("negative probability in {0}")]
    NegativeProbability(String),
    #[error("transition graph has a cycle through state {0}")]
    CyclicTransitionGraph(usize),
    #[error("state {0} carries a reward but has outgoing transitions")]
    RewardOnNonterminal(usize),
    #[error("state {0} has neither a reward nor outgoing transitions")]
    DanglingState(usize),
    #[error("reference to unknown state {0}")]
    UnknownState(usize),
    #[error("nonterminal state {0} has no observations")]
    MissingObservation(usize),
    #[error("action ({a1}, {a2}) out of range at state {state}")]
    ActionOutOfRange { state: usize, a1: usize, a2: usize },
    #[error("game has no states or an empty action set")]
    Empty,
    #[error("{observations} observation ids exceed the {states} states")]
    TooManyObservations { observations: usize, states: usize },
    #[error("zero-sum flag set but rewards at state {0} do not cancel")]
    NotZeroSum(usize),
    #[error("policy does not match {player}'s domain: {reason}")]
    DomainMismatch { player: Player, reason: String },
    #[error("enumerating {requested} profiles exceeds the cap of {cap}")]
    EnumerationCapExceeded { requested: String, cap: u64 },
}

/// Raw description of a game; validated by [`Posg::build`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PosgSpec {
    pub action_counts: [usize; 2],
    pub states: Vec<StateSpec>,
    pub start: Vec<(usize, Q)>,
    pub transitions: Vec<TransitionSpec>,
    pub zero_sum: bool,
    pub metadata: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateSpec {
    pub name: String,
    pub observations: Option<[u32; 2]>,
    pub rewards: Option<[Q; 2]>,
}

impl StateSpec {
    pub fn decision(name: impl Into<String>, o1: u32, o2: u32) -> Self {
        StateSpec {
            name: name.into(),
            observations: Some([o1, o2]),
            rewards: None,
        }
    }

    pub fn terminal(name: impl Into<String>, r1: Q, r2: Q) -> Self {
        StateSpec {
            name: name.into(),
            observations: None,
            rewards: Some([r1, r2]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSpec {
    pub state: usize,
    pub a1: usize,
    pub a2: usize,
    pub next: usize,
    pub prob: Q,
}

impl PosgSpec {
    pub fn new(a1: usize, a2: usize, zero_sum: bool) -> Self {
        PosgSpec {
            action_counts: [a1, a2],
            zero_sum,
            ..Default::default()
        }
    }

    pub fn add_state(&mut self, state: StateSpec) -> usize {
        self.states.push(state);
        self.states.len() - 1
    }

    pub fn add_transition(&mut self, state: usize, a1: usize, a2: usize, next: usize, prob: Q) {
        self.transitions.push(TransitionSpec {
            state,
            a1,
            a2,
            next,
            prob,
        });
    }

    pub fn add_edge(&mut self, state: usize, a1: usize, a2: usize, next: usize) {
        self.add_transition(state, a1, a2, next, Q::one());
    }

    /// Deterministic transition for every joint action in `pairs`.
    pub fn add_edges(&mut self, state: usize, pairs: &[(usize, usize)], next: usize) {
        for &(a1, a2) in pairs {
            self.add_transition(state, a1, a2, next, Q::one());
        }
    }

    pub fn add_metadata(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.push((key.into(), value.into()));
    }
}

/// The set of observation sequences at which one player acts, organised as
/// a trie. Keys are numbered in lexicographic order of their sequences,
/// which is also a pre-order walk of the trie.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyDomain {
    player: Player,
    num_actions: usize,
    sequences: Vec<Vec<u32>>,
    /// children of the virtual root (the empty sequence)
    roots: Vec<(u32, usize)>,
    children: Vec<Vec<(u32, usize)>>,
    subtree: Vec<usize>,
}

impl PolicyDomain {
    fn from_sequences(player: Player, num_actions: usize, set: BTreeSet<Vec<u32>>) -> Self {
        let sequences: Vec<Vec<u32>> = set.into_iter().collect();
        let index: HashMap<&[u32], usize> = sequences
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_slice(), i))
            .collect();
        let mut roots = Vec::new();
        let mut children = vec![Vec::new(); sequences.len()];
        for (i, seq) in sequences.iter().enumerate() {
            let last = *seq.last().expect("sequences are nonempty");
            if seq.len() == 1 {
                roots.push((last, i));
            } else {
                let parent = index[&seq[..seq.len() - 1]];
                children[parent].push((last, i));
            }
        }
        let mut subtree = vec![1usize; sequences.len()];
        for i in (0..sequences.len()).rev() {
            let total: usize = children[i].iter().map(|&(_, c)| subtree[c]).sum();
            subtree[i] += total;
        }
        PolicyDomain {
            player,
            num_actions,
            sequences,
            roots,
            children,
            subtree,
        }
    }

    pub fn player(&self) -> Player {
        self.player
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Number of keys (observation sequences).
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn sequences(&self) -> &[Vec<u32>] {
        &self.sequences
    }

    pub fn sequence(&self, key: usize) -> &[u32] {
        &self.sequences[key]
    }

    pub fn root(&self, obs: u32) -> Option<usize> {
        find_child(&self.roots, obs)
    }

    pub fn child(&self, key: usize, obs: u32) -> Option<usize> {
        find_child(&self.children[key], obs)
    }

    pub fn roots(&self) -> &[(u32, usize)] {
        &self.roots
    }

    pub fn children(&self, key: usize) -> &[(u32, usize)] {
        &self.children[key]
    }

    /// Keys in the subtree rooted at `key`, including `key` itself.
    pub fn subtree_size(&self, key: usize) -> usize {
        self.subtree[key]
    }

    pub fn policy_count(&self) -> BigUint {
        BigUint::from(self.num_actions).pow(self.len() as u32)
    }

    /// Policy count if it fits in a `u64`.
    pub fn policy_count_u64(&self) -> Option<u64> {
        (self.num_actions as u64).checked_pow(self.len() as u32)
    }

    /// Decodes a canonical index: the first key is the most significant digit.
    pub fn policy(&self, index: u64) -> Result<PurePolicy, PosgError> {
        let count = self.policy_count_u64().ok_or_else(|| self.mismatch("index overflow"))?;
        if index >= count {
            return Err(self.mismatch(&format!("index {index} >= policy count {count}")));
        }
        let base = self.num_actions as u64;
        let mut actions = vec![0u32; self.len()];
        let mut rest = index;
        for slot in actions.iter_mut().rev() {
            *slot = (rest % base) as u32;
            rest /= base;
        }
        Ok(PurePolicy {
            player: self.player,
            actions,
        })
    }

    pub fn index_of(&self, policy: &PurePolicy) -> Result<u64, PosgError> {
        self.check(policy)?;
        let base = self.num_actions as u64;
        policy.actions.iter().try_fold(0u64, |acc, &a| {
            acc.checked_mul(base)
                .and_then(|v| v.checked_add(a as u64))
                .ok_or_else(|| self.mismatch("index overflow"))
        })
    }

    pub fn check(&self, policy: &PurePolicy) -> Result<(), PosgError> {
        if policy.player != self.player {
            return Err(self.mismatch("policy belongs to the other player"));
        }
        if policy.actions.len() != self.len() {
            return Err(self.mismatch(&format!(
                "{} assignments for {} observation sequences",
                policy.actions.len(),
                self.len()
            )));
        }
        if let Some(a) = policy.actions.iter().find(|&&a| a as usize >= self.num_actions) {
            return Err(self.mismatch(&format!("action {a} out of range")));
        }
        Ok(())
    }

    fn mismatch(&self, reason: &str) -> PosgError {
        PosgError::DomainMismatch {
            player: self.player,
            reason: reason.to_string(),
        }
    }
}

fn find_child(list: &[(u32, usize)], obs: u32) -> Option<usize> {
    list.binary_search_by_key(&obs, |&(o, _)| o)
        .ok()
        .map(|i| list[i].1)
}

/// A deterministic policy: one action per key of the player's domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PurePolicy {
    player: Player,
    actions: Vec<u32>,
}

impl PurePolicy {
    pub fn new(player: Player, actions: Vec<u32>) -> Self {
        PurePolicy { player, actions }
    }

    pub fn player(&self) -> Player {
        self.player
    }

    pub fn actions(&self) -> &[u32] {
        &self.actions
    }

    pub fn action(&self, key: usize) -> usize {
        self.actions[key] as usize
    }
}

/// Finite-support distribution over pure policies of one player.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedPolicy {
    player: Player,
    support: Vec<(PurePolicy, Q)>,
}

impl MixedPolicy {
    pub fn pure(policy: PurePolicy) -> Self {
        MixedPolicy {
            player: policy.player,
            support: vec![(policy, Q::one())],
        }
    }

    /// Validates positivity, exact normalisation and distinct support.
    /// Zero-weight entries are dropped.
    pub fn new(player: Player, support: Vec<(PurePolicy, Q)>) -> Result<Self, PosgError> {
        let bad = |reason: &str| PosgError::DomainMismatch {
            player,
            reason: reason.to_string(),
        };
        let support: Vec<_> = support.into_iter().filter(|(_, w)| !w.is_zero()).collect();
        if support.iter().any(|(p, w)| w.is_negative() || p.player != player) {
            return Err(bad("negative weight or foreign policy"));
        }
        let total: Q = support.iter().map(|(_, w)| w).sum();
        if !total.is_one() {
            return Err(bad(&format!("weights sum to {}", format_q(&total))));
        }
        let distinct: BTreeSet<&PurePolicy> = support.iter().map(|(p, _)| p).collect();
        if distinct.len() != support.len() {
            return Err(bad("repeated support policy"));
        }
        Ok(MixedPolicy { player, support })
    }

    /// Like [`MixedPolicy::new`] but merges repeated policies.
    pub fn from_weights(player: Player, weights: Vec<(PurePolicy, Q)>) -> Result<Self, PosgError> {
        let mut merged: Vec<(PurePolicy, Q)> = Vec::new();
        for (p, w) in weights {
            match merged.iter_mut().find(|(q, _)| *q == p) {
                Some(entry) => entry.1 += w,
                None => merged.push((p, w)),
            }
        }
        MixedPolicy::new(player, merged)
    }

    pub fn player(&self) -> Player {
        self.player
    }

    pub fn support(&self) -> &[(PurePolicy, Q)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

/// Validated game. See the module documentation.
#[derive(Debug, Clone)]
pub struct Posg {
    names: Vec<String>,
    rewards: Vec<Option<[Q; 2]>>,
    observations: Vec<Option<[u32; 2]>>,
    /// `transitions[s][a1 * |A2| + a2]`, sorted by next state
    transitions: Vec<Vec<Vec<(usize, Q)>>>,
    start: Vec<(usize, Q)>,
    action_counts: [usize; 2],
    depth: usize,
    zero_sum: bool,
    metadata: Vec<(String, String)>,
    domains: [Arc<PolicyDomain>; 2],
}

/// Probability mass after `step` transitions of a profile.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerMass {
    pub live: Q,
    pub absorbed: Q,
}

impl Posg {
    pub fn build(spec: PosgSpec) -> Result<Posg, PosgError> {
        let n = spec.states.len();
        let [n1, n2] = spec.action_counts;
        if n == 0 || n1 == 0 || n2 == 0 {
            return Err(PosgError::Empty);
        }
        let mut rows: Vec<BTreeMap<(usize, usize), BTreeMap<usize, Q>>> = vec![BTreeMap::new(); n];
        for t in &spec.transitions {
            if t.state >= n {
                return Err(PosgError::UnknownState(t.state));
            }
            if t.next >= n {
                return Err(PosgError::UnknownState(t.next));
            }
            if t.a1 >= n1 || t.a2 >= n2 {
                return Err(PosgError::ActionOutOfRange {
                    state: t.state,
                    a1: t.a1,
                    a2: t.a2,
                });
            }
            if t.prob.is_negative() {
                return Err(PosgError::NegativeProbability(format!(
                    "transition ({}, {}, {}) -> {}",
                    t.state, t.a1, t.a2, t.next
                )));
            }
            if t.prob.is_zero() {
                continue;
            }
            *rows[t.state]
                .entry((t.a1, t.a2))
                .or_default()
                .entry(t.next)
                .or_insert_with(Q::zero) += &t.prob;
        }

        let mut transitions = vec![Vec::new(); n];
        let mut observations = vec![None; n];
        let mut rewards = vec![None; n];
        for (s, st) in spec.states.iter().enumerate() {
            let nonterminal = !rows[s].is_empty();
            match (&st.rewards, nonterminal) {
                (Some(_), true) => return Err(PosgError::RewardOnNonterminal(s)),
                (None, false) => return Err(PosgError::DanglingState(s)),
                (Some(r), false) => {
                    if spec.zero_sum && !(&r[0] + &r[1]).is_zero() {
                        return Err(PosgError::NotZeroSum(s));
                    }
                    rewards[s] = Some(r.clone());
                }
                (None, true) => {
                    observations[s] = Some(st.observations.ok_or(PosgError::MissingObservation(s))?);
                    let mut table = Vec::with_capacity(n1 * n2);
                    for a1 in 0..n1 {
                        for a2 in 0..n2 {
                            let row = rows[s].remove(&(a1, a2)).unwrap_or_default();
                            let total: Q = row.values().sum();
                            if !total.is_one() {
                                return Err(PosgError::NonStochasticTransition {
                                    state: s,
                                    a1,
                                    a2,
                                    total: format_q(&total),
                                });
                            }
                            table.push(row.into_iter().collect::<Vec<_>>());
                        }
                    }
                    transitions[s] = table;
                }
            }
        }

        let mut start: BTreeMap<usize, Q> = BTreeMap::new();
        for (s, p) in &spec.start {
            if *s >= n {
                return Err(PosgError::UnknownState(*s));
            }
            if p.is_negative() {
                return Err(PosgError::NegativeProbability("start distribution".into()));
            }
            if !p.is_zero() {
                *start.entry(*s).or_insert_with(Q::zero) += p;
            }
        }
        let total: Q = start.values().sum();
        if !total.is_one() {
            return Err(PosgError::NonStochasticStart(format_q(&total)));
        }

        let observation_ids: BTreeSet<u32> = observations.iter().flatten().flatten().copied().collect();
        if observation_ids.len() > n {
            return Err(PosgError::TooManyObservations {
                observations: observation_ids.len(),
                states: n,
            });
        }

        let depth = longest_path(&transitions)?;
        let mut game = Posg {
            names: spec.states.iter().map(|s| s.name.clone()).collect(),
            rewards,
            observations,
            transitions,
            start: start.into_iter().collect(),
            action_counts: spec.action_counts,
            depth,
            zero_sum: spec.zero_sum,
            metadata: spec.metadata,
            domains: [
                Arc::new(PolicyDomain::from_sequences(Player::One, n1, BTreeSet::new())),
                Arc::new(PolicyDomain::from_sequences(Player::Two, n2, BTreeSet::new())),
            ],
        };
        game.domains = [
            Arc::new(game.compute_domain(Player::One)),
            Arc::new(game.compute_domain(Player::Two)),
        ];
        Ok(game)
    }

    /// A single decision state whose joint actions lead to one terminal each.
    pub fn from_normal_form(nfg: &NormalFormGame) -> Posg {
        let (rows, cols) = nfg.dims();
        let mut spec = PosgSpec::new(rows, cols, nfg.is_zero_sum());
        let root = spec.add_state(StateSpec::decision("root", 0, 0));
        spec.start.push((root, Q::one()));
        for r in 0..rows {
            for c in 0..cols {
                let z = spec.add_state(StateSpec::terminal(
                    format!("z{r}_{c}"),
                    nfg.payoff(Player::One, r, c).clone(),
                    nfg.payoff(Player::Two, r, c).clone(),
                ));
                spec.add_transition(root, r, c, z, Q::one());
            }
        }
        Posg::build(spec).expect("normal-form games are valid one-shot games")
    }

    /// Reachable `(state, own observation sequence)` pairs; every single
    /// path is realisable by some pure profile because its prefixes have
    /// distinct lengths.
    fn compute_domain(&self, player: Player) -> PolicyDomain {
        let i = player.index();
        let mut seen: BTreeSet<(usize, Vec<u32>)> = BTreeSet::new();
        let mut stack: Vec<(usize, Vec<u32>)> = Vec::new();
        for (s, _) in &self.start {
            if let Some(obs) = self.observations[*s] {
                stack.push((*s, vec![obs[i]]));
            }
        }
        while let Some((s, seq)) = stack.pop() {
            if !seen.insert((s, seq.clone())) {
                continue;
            }
            let nexts: BTreeSet<usize> = self.transitions[s]
                .iter()
                .flat_map(|row| row.iter().map(|(t, _)| *t))
                .collect();
            for t in nexts {
                if let Some(obs) = self.observations[t] {
                    let mut next = seq.clone();
                    next.push(obs[i]);
                    stack.push((t, next));
                }
            }
        }
        let sequences = seen.into_iter().map(|(_, seq)| seq).collect();
        PolicyDomain::from_sequences(player, self.action_counts[i], sequences)
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.names[s]
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.rewards[s].is_some()
    }

    pub fn terminal_count(&self) -> usize {
        self.rewards.iter().filter(|r| r.is_some()).count()
    }

    pub fn rewards(&self, s: usize) -> Option<&[Q; 2]> {
        self.rewards[s].as_ref()
    }

    pub fn observation(&self, s: usize, player: Player) -> Option<u32> {
        self.observations[s].map(|o| o[player.index()])
    }

    pub fn transition(&self, s: usize, a1: usize, a2: usize) -> &[(usize, Q)] {
        &self.transitions[s][a1 * self.action_counts[1] + a2]
    }

    pub fn start(&self) -> &[(usize, Q)] {
        &self.start
    }

    pub fn action_counts(&self) -> [usize; 2] {
        self.action_counts
    }

    pub fn num_actions(&self, player: Player) -> usize {
        self.action_counts[player.index()]
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn is_zero_sum(&self) -> bool {
        self.zero_sum
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    pub fn metadata_value(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn domain(&self, player: Player) -> &Arc<PolicyDomain> {
        &self.domains[player.index()]
    }

    pub fn policy(&self, player: Player, index: u64) -> Result<PurePolicy, PosgError> {
        self.domain(player).policy(index)
    }

    pub fn policy_index(&self, policy: &PurePolicy) -> Result<u64, PosgError> {
        self.domain(policy.player()).index_of(policy)
    }

    /// Distinct observation ids used by either player.
    pub fn observation_count(&self) -> usize {
        self.observations
            .iter()
            .flatten()
            .flatten()
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Both observation functions are injective on nonterminal states.
    pub fn is_fully_observable(&self) -> bool {
        Player::BOTH.iter().all(|&p| {
            let mut seen = BTreeSet::new();
            self.observations
                .iter()
                .flatten()
                .all(|o| seen.insert(o[p.index()]))
        })
    }

    /// Every non-start state has exactly one incoming edge of the transition
    /// multigraph and start states have none, i.e. the multigraph is a forest
    /// rooted at the start distribution's support.
    pub fn is_tree_form(&self) -> bool {
        let mut indegree = vec![0usize; self.num_states()];
        for table in &self.transitions {
            for row in table {
                for (t, _) in row {
                    indegree[*t] += 1;
                }
            }
        }
        let starts: BTreeSet<usize> = self.start.iter().map(|(s, _)| *s).collect();
        (0..self.num_states()).all(|s| {
            if starts.contains(&s) {
                indegree[s] == 0
            } else {
                indegree[s] == 1
            }
        })
    }

    /// Exact expected rewards `(V_1, V_2)` of a pure profile.
    pub fn evaluate_profile(&self, p1: &PurePolicy, p2: &PurePolicy) -> Result<[Q; 2], PosgError> {
        let (value, _) = self.propagate(p1, p2)?;
        Ok(value)
    }

    /// Per-step live and absorbed probability mass of a pure profile.
    pub fn profile_layers(&self, p1: &PurePolicy, p2: &PurePolicy) -> Result<Vec<LayerMass>, PosgError> {
        Ok(self.propagate(p1, p2)?.1)
    }

    fn propagate(&self, p1: &PurePolicy, p2: &PurePolicy) -> Result<([Q; 2], Vec<LayerMass>), PosgError> {
        let d1 = self.domain(Player::One);
        let d2 = self.domain(Player::Two);
        d1.check(p1)?;
        d2.check(p2)?;
        let mut value = [Q::zero(), Q::zero()];
        let mut absorbed = Q::zero();
        let mut layer: BTreeMap<(usize, usize, usize), Q> = BTreeMap::new();
        for (s, p) in &self.start {
            self.push_state(&mut layer, &mut value, &mut absorbed, *s, None, p.clone());
        }
        let mut layers = vec![LayerMass {
            live: layer.values().sum(),
            absorbed: absorbed.clone(),
        }];
        while !layer.is_empty() {
            let mut next: BTreeMap<(usize, usize, usize), Q> = BTreeMap::new();
            for ((s, k1, k2), mass) in layer {
                let a1 = p1.action(k1);
                let a2 = p2.action(k2);
                for (t, p) in self.transition(s, a1, a2) {
                    self.push_state(&mut next, &mut value, &mut absorbed, *t, Some((k1, k2)), &mass * p);
                }
            }
            layers.push(LayerMass {
                live: next.values().sum(),
                absorbed: absorbed.clone(),
            });
            layer = next;
        }
        Ok((value, layers))
    }

    fn push_state(
        &self,
        layer: &mut BTreeMap<(usize, usize, usize), Q>,
        value: &mut [Q; 2],
        absorbed: &mut Q,
        s: usize,
        keys: Option<(usize, usize)>,
        mass: Q,
    ) {
        if let Some(r) = &self.rewards[s] {
            value[0] += &mass * &r[0];
            value[1] += &mass * &r[1];
            *absorbed += mass;
            return;
        }
        let obs = self.observations[s].expect("nonterminal states observe");
        let d1 = self.domain(Player::One);
        let d2 = self.domain(Player::Two);
        let (k1, k2) = match keys {
            None => (d1.root(obs[0]), d2.root(obs[1])),
            Some((k1, k2)) => (d1.child(k1, obs[0]), d2.child(k2, obs[1])),
        };
        let key = (
            s,
            k1.expect("domain covers reachable sequences"),
            k2.expect("domain covers reachable sequences"),
        );
        *layer.entry(key).or_insert_with(Q::zero) += mass;
    }

    /// Bilinear extension of [`Posg::evaluate_profile`].
    pub fn evaluate_mixed(&self, m1: &MixedPolicy, m2: &MixedPolicy) -> Result<[Q; 2], PosgError> {
        let mut total = [Q::zero(), Q::zero()];
        for (p1, w1) in m1.support() {
            for (p2, w2) in m2.support() {
                let v = self.evaluate_profile(p1, p2)?;
                let w = w1 * w2;
                total[0] += &w * &v[0];
                total[1] += &w * &v[1];
            }
        }
        Ok(total)
    }

    /// The induced normal form over all pure policies in canonical order.
    pub fn induced_normal_form(&self, cap: u64) -> Result<NormalFormGame, PosgError> {
        let c1 = self.domain(Player::One).policy_count();
        let c2 = self.domain(Player::Two).policy_count();
        let requested = &c1 * &c2;
        let fits = requested.to_u64().is_some_and(|r| r <= cap);
        if !fits {
            return Err(PosgError::EnumerationCapExceeded {
                requested: requested.to_string(),
                cap,
            });
        }
        let rows: Vec<PurePolicy> = (0..c1.to_u64().unwrap())
            .map(|i| self.policy(Player::One, i))
            .collect::<Result<_, _>>()?;
        let cols: Vec<PurePolicy> = (0..c2.to_u64().unwrap())
            .map(|i| self.policy(Player::Two, i))
            .collect::<Result<_, _>>()?;
        let mut v1 = Vec::with_capacity(rows.len());
        let mut v2 = Vec::with_capacity(rows.len());
        for r in &rows {
            let mut row1 = Vec::with_capacity(cols.len());
            let mut row2 = Vec::with_capacity(cols.len());
            for c in &cols {
                let [a, b] = self.evaluate_profile(r, c)?;
                row1.push(a);
                row2.push(b);
            }
            v1.push(row1);
            v2.push(row2);
        }
        let mut nfg = NormalFormGame::new(v1, v2).expect("rectangular by construction");
        nfg.set_labels(
            (0..rows.len() as u64).collect(),
            (0..cols.len() as u64).collect(),
        );
        if self.zero_sum {
            nfg = nfg.into_zero_sum().expect("zero-sum game induces zero-sum matrices");
        }
        Ok(nfg)
    }

    /// The raw description this game was built from, in canonical order.
    pub fn to_spec(&self) -> PosgSpec {
        let mut spec = PosgSpec::new(self.action_counts[0], self.action_counts[1], self.zero_sum);
        spec.metadata = self.metadata.clone();
        for s in 0..self.num_states() {
            spec.states.push(StateSpec {
                name: self.names[s].clone(),
                observations: self.observations[s],
                rewards: self.rewards[s].clone(),
            });
            for (idx, row) in self.transitions[s].iter().enumerate() {
                let a1 = idx / self.action_counts[1];
                let a2 = idx % self.action_counts[1];
                for (t, p) in row {
                    spec.add_transition(s, a1, a2, *t, p.clone());
                }
            }
        }
        spec.start = self.start.clone();
        spec
    }
}

impl PartialEq for Posg {
    fn eq(&self, other: &Self) -> bool {
        self.to_spec() == other.to_spec()
    }
}

fn longest_path(transitions: &[Vec<Vec<(usize, Q)>>]) -> Result<usize, PosgError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done(usize),
    }
    let n = transitions.len();
    let succ: Vec<BTreeSet<usize>> = transitions
        .iter()
        .map(|t| t.iter().flat_map(|r| r.iter().map(|(s, _)| *s)).collect())
        .collect();
    let mut marks = vec![Mark::New; n];
    let mut best = 0;
    for root in 0..n {
        if marks[root] != Mark::New {
            continue;
        }
        // iterative DFS: (state, expanded?)
        let mut stack = vec![(root, false)];
        while let Some((s, expanded)) = stack.pop() {
            if expanded {
                let d = succ[s]
                    .iter()
                    .map(|&t| match marks[t] {
                        Mark::Done(d) => d + 1,
                        _ => unreachable!("children finish first"),
                    })
                    .max()
                    .unwrap_or(0);
                marks[s] = Mark::Done(d);
                best = best.max(d);
                continue;
            }
            match marks[s] {
                Mark::Done(_) => continue,
                Mark::Active => return Err(PosgError::CyclicTransitionGraph(s)),
                Mark::New => {}
            }
            marks[s] = Mark::Active;
            stack.push((s, true));
            for &t in &succ[s] {
                match marks[t] {
                    Mark::Active => return Err(PosgError::CyclicTransitionGraph(t)),
                    Mark::New => stack.push((t, false)),
                    Mark::Done(_) => {}
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    fn one_shot(reward: i64) -> PosgSpec {
        let mut spec = PosgSpec::new(1, 1, true);
        let s = spec.add_state(StateSpec::decision("s", 0, 0));
        let z = spec.add_state(StateSpec::terminal("z", qi(reward), qi(-reward)));
        spec.add_transition(s, 0, 0, z, qi(1));
        spec.start.push((s, qi(1)));
        spec
    }

    #[test]
    fn single_state_game_has_one_sequence() {
        let g = Posg::build(one_shot(1)).unwrap();
        assert_eq!(g.domain(Player::One).sequences(), &[vec![0]]);
        assert_eq!(g.depth(), 1);
        let p1 = g.policy(Player::One, 0).unwrap();
        let p2 = g.policy(Player::Two, 0).unwrap();
        assert_eq!(g.evaluate_profile(&p1, &p2).unwrap(), [qi(1), qi(-1)]);
        let nfg = g.induced_normal_form(100).unwrap();
        assert_eq!(nfg.dims(), (1, 1));
        assert_eq!(nfg.payoff(Player::One, 0, 0), &qi(1));
    }

    #[test]
    fn rejects_half_stochastic_row() {
        let mut spec = one_shot(1);
        spec.transitions[0].prob = q(1, 2);
        assert!(matches!(
            Posg::build(spec),
            Err(PosgError::NonStochasticTransition { .. })
        ));
    }

    #[test]
    fn rejects_self_loop() {
        let mut spec = one_shot(1);
        spec.transitions[0].prob = q(1, 2);
        spec.add_transition(0, 0, 0, 0, q(1, 2));
        assert_eq!(Posg::build(spec), Err(PosgError::CyclicTransitionGraph(0)));
    }

    #[test]
    fn rejects_longer_cycle() {
        let mut spec = PosgSpec::new(1, 1, false);
        let a = spec.add_state(StateSpec::decision("a", 0, 0));
        let b = spec.add_state(StateSpec::decision("b", 1, 1));
        spec.add_transition(a, 0, 0, b, qi(1));
        spec.add_transition(b, 0, 0, a, qi(1));
        spec.start.push((a, qi(1)));
        assert!(matches!(Posg::build(spec), Err(PosgError::CyclicTransitionGraph(_))));
    }

    #[test]
    fn rejects_reward_on_nonterminal_and_dangling() {
        let mut spec = one_shot(1);
        spec.states[0].rewards = Some([qi(0), qi(0)]);
        assert_eq!(Posg::build(spec), Err(PosgError::RewardOnNonterminal(0)));

        let mut spec = one_shot(1);
        spec.add_state(StateSpec::decision("loose", 5, 5));
        assert_eq!(Posg::build(spec), Err(PosgError::DanglingState(2)));
    }

    #[test]
    fn rejects_non_cancelling_rewards() {
        let mut spec = one_shot(1);
        spec.states[1].rewards = Some([qi(1), qi(1)]);
        assert_eq!(Posg::build(spec), Err(PosgError::NotZeroSum(1)));
    }

    #[test]
    fn mixed_policy_validation() {
        let p = PurePolicy::new(Player::One, vec![0]);
        let r = PurePolicy::new(Player::One, vec![1]);
        assert!(MixedPolicy::new(Player::One, vec![(p.clone(), q(1, 2)), (r.clone(), q(1, 3))]).is_err());
        assert!(MixedPolicy::new(Player::One, vec![(p.clone(), q(1, 2)), (p.clone(), q(1, 2))]).is_err());
        let m = MixedPolicy::from_weights(Player::One, vec![(p.clone(), q(1, 2)), (p, q(1, 2))]).unwrap();
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn domain_mismatch_is_reported() {
        let g = Posg::build(one_shot(1)).unwrap();
        let bad = PurePolicy::new(Player::One, vec![0, 0]);
        let p2 = g.policy(Player::Two, 0).unwrap();
        assert!(matches!(
            g.evaluate_profile(&bad, &p2),
            Err(PosgError::DomainMismatch { .. })
        ));
    }
}
