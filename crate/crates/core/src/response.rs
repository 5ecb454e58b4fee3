//! Exact best responses against a mixed opponent.
//!
//! The dynamic program walks the responder's observation-sequence trie. A
//! node carries the joint mass over `(state, opponent key, opponent support
//! index)`; each action splits that mass over the child observations. Every
//! optimal action is kept, which gives exact counts and uniform sampling of
//! the optimal set without enumerating it.

use std::collections::BTreeMap;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use thiserror::Error;

use crate::posg::{MixedPolicy, Player, PolicyDomain, Posg, PosgError, PurePolicy};
use crate::rational::Q;

/// Upper bound on DP nodes visited by one call.
pub const DEFAULT_NODE_CAP: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResponseError {
    #[error(transparent)]
    Game(#[from] PosgError),
    #[error("scripted candidate scores {achieved}, below the best-response value {value}")]
    ScriptedCandidateSuboptimal { achieved: String, value: String },
    #[error("best-response search exceeds {cap} information nodes")]
    CapExceeded { cap: usize },
    #[error("{count} best responses exceed the enumeration cap {cap}")]
    EnumerationCapExceeded { count: String, cap: u64 },
}

/// How the witness is chosen among optimal policies.
pub enum Selection<'a> {
    /// Smallest optimal action at every node; unconstrained nodes play 0.
    /// This is the optimal policy with the smallest canonical index.
    Lexicographic,
    /// Uniform over the whole optimal set.
    Uniform(&'a mut dyn rand::RngCore),
    /// The given policy, which must be optimal.
    Scripted(&'a PurePolicy),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponseResult {
    pub value: Q,
    pub witness: PurePolicy,
    pub count: BigUint,
}

type Entries = BTreeMap<(usize, usize, usize), Q>;

struct ActionPlan {
    value: Q,
    count: BigUint,
    /// `(child key, solved subtree)`; `None` means no mass reaches the child.
    children: Vec<(usize, Option<Box<Node>>)>,
}

struct Node {
    key: usize,
    value: Q,
    count: BigUint,
    /// Per action; only optimal actions keep their children.
    plans: Vec<ActionPlan>,
    optimal: Vec<usize>,
}

/// Solved decision tree for one `(game, player, opponent)` triple.
pub struct ResponseTree<'g> {
    game: &'g Posg,
    player: Player,
    domain: &'g PolicyDomain,
    value: Q,
    count: BigUint,
    roots: Vec<(usize, Option<Box<Node>>)>,
}

struct Solver<'g> {
    game: &'g Posg,
    player: Player,
    own: &'g PolicyDomain,
    opp: &'g PolicyDomain,
    opp_policies: Vec<&'g PurePolicy>,
    nodes: usize,
    cap: usize,
}

fn free_count(domain: &PolicyDomain, key: usize) -> BigUint {
    BigUint::from(domain.num_actions()).pow(domain.subtree_size(key) as u32)
}

impl<'g> Solver<'g> {
    fn joint(&self, own: usize, opp: usize) -> (usize, usize) {
        match self.player {
            Player::One => (own, opp),
            Player::Two => (opp, own),
        }
    }

    fn solve(&mut self, key: usize, entries: &Entries) -> Result<Node, ResponseError> {
        self.nodes += 1;
        if self.nodes > self.cap {
            return Err(ResponseError::CapExceeded { cap: self.cap });
        }
        let i = self.player.index();
        let o = self.player.other().index();
        let mut plans = Vec::with_capacity(self.own.num_actions());
        for a in 0..self.own.num_actions() {
            let mut value = Q::zero();
            let mut split: BTreeMap<usize, Entries> = BTreeMap::new();
            for ((s, opp_key, j), mass) in entries {
                let b = self.opp_policies[*j].action(*opp_key);
                let (a1, a2) = self.joint(a, b);
                for (t, p) in self.game.transition(*s, a1, a2) {
                    let m = mass * p;
                    if let Some(r) = self.game.rewards(*t) {
                        value += &m * &r[i];
                        continue;
                    }
                    let own_obs = self.game.observation(*t, self.player).expect("nonterminal");
                    let opp_obs = self.game.observation(*t, self.player.other()).expect("nonterminal");
                    let child = self.own.child(key, own_obs).expect("domain covers reachable keys");
                    let opp_child = self.opp.child(*opp_key, opp_obs).expect("domain covers reachable keys");
                    *split
                        .entry(child)
                        .or_default()
                        .entry((*t, opp_child, *j))
                        .or_insert_with(Q::zero) += m;
                }
            }
            let _ = o;
            let mut count = BigUint::one();
            let mut children = Vec::new();
            for &(_, c) in self.own.children(key) {
                match split.get(&c) {
                    Some(sub) => {
                        let node = self.solve(c, sub)?;
                        value += &node.value;
                        count *= &node.count;
                        children.push((c, Some(Box::new(node))));
                    }
                    None => {
                        count *= free_count(self.own, c);
                        children.push((c, None));
                    }
                }
            }
            plans.push(ActionPlan { value, count, children });
        }
        let best = plans.iter().map(|p| &p.value).max().expect("actions exist").clone();
        let optimal: Vec<usize> = (0..plans.len()).filter(|&a| plans[a].value == best).collect();
        let count = optimal.iter().map(|&a| &plans[a].count).sum();
        for (a, plan) in plans.iter_mut().enumerate() {
            if !optimal.contains(&a) {
                plan.children.clear();
            }
        }
        Ok(Node {
            key,
            value: best,
            count,
            plans,
            optimal,
        })
    }
}

impl<'g> ResponseTree<'g> {
    pub fn solve(game: &'g Posg, player: Player, opp: &'g MixedPolicy) -> Result<Self, ResponseError> {
        Self::solve_capped(game, player, opp, DEFAULT_NODE_CAP)
    }

    pub fn solve_capped(game: &'g Posg, player: Player, opp: &'g MixedPolicy, cap: usize) -> Result<Self, ResponseError> {
        let own = game.domain(player).as_ref();
        let opp_domain = game.domain(player.other()).as_ref();
        if opp.player() != player.other() {
            return Err(PosgError::DomainMismatch {
                player: opp.player(),
                reason: "opponent mixture belongs to the responding player".into(),
            }
            .into());
        }
        for (p, _) in opp.support() {
            opp_domain.check(p)?;
        }
        let mut solver = Solver {
            game,
            player,
            own,
            opp: opp_domain,
            opp_policies: opp.support().iter().map(|(p, _)| p).collect(),
            nodes: 0,
            cap,
        };
        let mut value = Q::zero();
        let mut split: BTreeMap<usize, Entries> = BTreeMap::new();
        for (s, p) in game.start() {
            for (j, (_, w)) in opp.support().iter().enumerate() {
                let m = p * w;
                if let Some(r) = game.rewards(*s) {
                    value += &m * &r[player.index()];
                    continue;
                }
                let k = own.root(game.observation(*s, player).expect("nonterminal")).expect("root key");
                let ok = opp_domain
                    .root(game.observation(*s, player.other()).expect("nonterminal"))
                    .expect("root key");
                *split.entry(k).or_default().entry((*s, ok, j)).or_insert_with(Q::zero) += m;
            }
        }
        let mut count = BigUint::one();
        let mut roots = Vec::new();
        for &(_, k) in own.roots() {
            match split.get(&k) {
                Some(sub) => {
                    let node = solver.solve(k, sub)?;
                    value += &node.value;
                    count *= &node.count;
                    roots.push((k, Some(Box::new(node))));
                }
                None => {
                    count *= free_count(own, k);
                    roots.push((k, None));
                }
            }
        }
        Ok(ResponseTree {
            game,
            player,
            domain: own,
            value,
            count,
            roots,
        })
    }

    pub fn value(&self) -> &Q {
        &self.value
    }

    pub fn count(&self) -> &BigUint {
        &self.count
    }

    /// The optimal policy with the smallest canonical index.
    pub fn lexicographic(&self) -> PurePolicy {
        let mut actions = vec![0u32; self.domain.len()];
        fn walk(node: &Node, actions: &mut [u32]) {
            let a = node.optimal[0];
            actions[node.key] = a as u32;
            for (_, child) in &node.plans[a].children {
                if let Some(c) = child {
                    walk(c, actions);
                }
            }
        }
        for (_, root) in &self.roots {
            if let Some(n) = root {
                walk(n, &mut actions);
            }
        }
        PurePolicy::new(self.player, actions)
    }

    /// A uniformly random optimal policy.
    pub fn sample(&self, rng: &mut dyn rand::RngCore) -> PurePolicy {
        let mut actions = vec![0u32; self.domain.len()];
        let domain = self.domain;
        let fill_free = |key: usize, actions: &mut [u32], rng: &mut dyn rand::RngCore| {
            for slot in &mut actions[key..key + domain.subtree_size(key)] {
                *slot = rng.gen_range(0..domain.num_actions()) as u32;
            }
        };
        fn walk(
            node: &Node,
            actions: &mut [u32],
            rng: &mut dyn rand::RngCore,
            fill_free: &dyn Fn(usize, &mut [u32], &mut dyn rand::RngCore),
        ) {
            let mut ticket = rng.gen_biguint_below(&node.count);
            let mut chosen = *node.optimal.last().expect("optimal action exists");
            for &a in &node.optimal {
                if ticket < node.plans[a].count {
                    chosen = a;
                    break;
                }
                ticket -= &node.plans[a].count;
            }
            actions[node.key] = chosen as u32;
            for (c, child) in &node.plans[chosen].children {
                match child {
                    Some(n) => walk(n, actions, rng, fill_free),
                    None => fill_free(*c, actions, rng),
                }
            }
        }
        for (k, root) in &self.roots {
            match root {
                Some(n) => walk(n, &mut actions, rng, &fill_free),
                None => fill_free(*k, &mut actions, rng),
            }
        }
        PurePolicy::new(self.player, actions)
    }

    /// Every optimal policy, in canonical order; refuses above `cap`.
    pub fn enumerate(&self, cap: u64) -> Result<Vec<PurePolicy>, ResponseError> {
        if self.count.to_u64().is_none_or(|c| c > cap) {
            return Err(ResponseError::EnumerationCapExceeded {
                count: self.count.to_string(),
                cap,
            });
        }
        // Each partial assignment lists (key, action) pairs; keys not listed
        // after expansion are free.
        let domain = self.domain;
        fn expand_free(domain: &PolicyDomain, key: usize, partial: Vec<Vec<(usize, u32)>>) -> Vec<Vec<(usize, u32)>> {
            let mut out = partial;
            for k in key..key + domain.subtree_size(key) {
                let mut next = Vec::with_capacity(out.len() * domain.num_actions());
                for p in &out {
                    for a in 0..domain.num_actions() as u32 {
                        let mut q = p.clone();
                        q.push((k, a));
                        next.push(q);
                    }
                }
                out = next;
            }
            out
        }
        fn expand(domain: &PolicyDomain, node: &Node) -> Vec<Vec<(usize, u32)>> {
            let mut all = Vec::new();
            for &a in &node.optimal {
                let mut partial = vec![vec![(node.key, a as u32)]];
                for (c, child) in &node.plans[a].children {
                    partial = match child {
                        Some(n) => product(partial, expand(domain, n)),
                        None => expand_free(domain, *c, partial),
                    };
                }
                all.extend(partial);
            }
            all
        }
        fn product(left: Vec<Vec<(usize, u32)>>, right: Vec<Vec<(usize, u32)>>) -> Vec<Vec<(usize, u32)>> {
            let mut out = Vec::with_capacity(left.len() * right.len());
            for l in &left {
                for r in &right {
                    let mut v = l.clone();
                    v.extend_from_slice(r);
                    out.push(v);
                }
            }
            out
        }
        let mut partial = vec![Vec::new()];
        for (k, root) in &self.roots {
            partial = match root {
                Some(n) => product(partial, expand(domain, n)),
                None => expand_free(domain, *k, partial),
            };
        }
        let mut policies: Vec<PurePolicy> = partial
            .into_iter()
            .map(|assignment| {
                let mut actions = vec![0u32; domain.len()];
                for (k, a) in assignment {
                    actions[k] = a;
                }
                PurePolicy::new(self.player, actions)
            })
            .collect();
        policies.sort();
        Ok(policies)
    }

    pub fn game(&self) -> &Posg {
        self.game
    }
}

pub fn best_response(
    game: &Posg,
    player: Player,
    opp: &MixedPolicy,
    select: Selection<'_>,
) -> Result<BestResponseResult, ResponseError> {
    let tree = ResponseTree::solve(game, player, opp)?;
    let witness = match select {
        Selection::Lexicographic => tree.lexicographic(),
        Selection::Uniform(rng) => tree.sample(rng),
        Selection::Scripted(candidate) => {
            let achieved = value_against(game, player, candidate, opp)?;
            if achieved != tree.value {
                return Err(ResponseError::ScriptedCandidateSuboptimal {
                    achieved: crate::rational::format_q(&achieved),
                    value: crate::rational::format_q(&tree.value),
                });
            }
            candidate.clone()
        }
    };
    Ok(BestResponseResult {
        value: tree.value,
        witness,
        count: tree.count,
    })
}

/// Value of a pure policy for `player` against the opponent mixture.
pub fn value_against(game: &Posg, player: Player, policy: &PurePolicy, opp: &MixedPolicy) -> Result<Q, PosgError> {
    let own = MixedPolicy::pure(policy.clone());
    let v = match player {
        Player::One => game.evaluate_mixed(&own, opp)?,
        Player::Two => game.evaluate_mixed(opp, &own)?,
    };
    Ok(v[player.index()].clone())
}

pub fn best_response_value(game: &Posg, player: Player, opp: &MixedPolicy) -> Result<Q, ResponseError> {
    Ok(ResponseTree::solve(game, player, opp)?.value)
}

pub fn count_best_responses(game: &Posg, player: Player, opp: &MixedPolicy) -> Result<BigUint, ResponseError> {
    Ok(ResponseTree::solve(game, player, opp)?.count)
}

pub fn is_best_response(game: &Posg, player: Player, candidate: &PurePolicy, opp: &MixedPolicy) -> Result<bool, ResponseError> {
    game.domain(player).check(candidate)?;
    let value = best_response_value(game, player, opp)?;
    Ok(value_against(game, player, candidate, opp)? == value)
}

/// Source of exact best-response values, for gap computations.
pub trait ResponseOracle: Sync {
    fn value(&self, game: &Posg, player: Player, opp: &MixedPolicy) -> Result<Q, ResponseError>;
}

/// The dynamic-programming oracle.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactOracle;

impl ResponseOracle for ExactOracle {
    fn value(&self, game: &Posg, player: Player, opp: &MixedPolicy) -> Result<Q, ResponseError> {
        best_response_value(game, player, opp)
    }
}

/// Brute force over every pure policy; for cross-checking small games.
#[derive(Debug, Clone, Copy)]
pub struct EnumerationOracle {
    pub cap: u64,
}

impl EnumerationOracle {
    /// All `(policy, value)` pairs in canonical order.
    pub fn all_values(&self, game: &Posg, player: Player, opp: &MixedPolicy) -> Result<Vec<(PurePolicy, Q)>, ResponseError> {
        let domain = game.domain(player);
        let n = domain
            .policy_count_u64()
            .filter(|&n| n <= self.cap)
            .ok_or_else(|| ResponseError::EnumerationCapExceeded {
                count: domain.policy_count().to_string(),
                cap: self.cap,
            })?;
        (0..n)
            .map(|i| {
                let p = domain.policy(i)?;
                let v = value_against(game, player, &p, opp)?;
                Ok((p, v))
            })
            .collect()
    }
}

impl ResponseOracle for EnumerationOracle {
    fn value(&self, game: &Posg, player: Player, opp: &MixedPolicy) -> Result<Q, ResponseError> {
        Ok(self
            .all_values(game, player, opp)?
            .into_iter()
            .map(|(_, v)| v)
            .max()
            .expect("at least one policy"))
    }
}
