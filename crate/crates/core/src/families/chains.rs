//! Automaton games that read two bitstrings in parallel, most significant
//! bit first: guess-the-string, bigger-number and weak bigger-number.

use std::cmp::Ordering;

use num_traits::One;

use crate::normal_form::NormalFormGame;
use crate::posg::{Posg, PosgSpec, StateSpec};
use crate::rational::{qi, Q};

const EQUAL: [(usize, usize); 2] = [(0, 0), (1, 1)];
const UNEQUAL: [(usize, usize); 2] = [(0, 1), (1, 0)];

fn terminal(spec: &mut PosgSpec, name: String, r1: i64) -> usize {
    spec.add_state(StateSpec::terminal(name, qi(r1), qi(-r1)))
}

/// `k` chain states; any disagreement pays P1 `+1`, full agreement pays `-1`.
/// Fully observable.
pub fn guess_the_string(k: usize) -> Posg {
    let mut spec = PosgSpec::new(2, 2, true);
    spec.add_metadata("family", "guess-the-string");
    spec.add_metadata("k", k.to_string());
    let chain: Vec<usize> = (0..k)
        .map(|t| spec.add_state(StateSpec::decision(format!("s{t}"), t as u32, t as u32)))
        .collect();
    let lose = terminal(&mut spec, "equal".into(), -1);
    for t in 0..k {
        let win = terminal(&mut spec, format!("differ{t}"), 1);
        let next = chain.get(t + 1).copied().unwrap_or(lose);
        spec.add_edges(chain[t], &EQUAL, next);
        spec.add_edges(chain[t], &UNEQUAL, win);
    }
    spec.start.push((chain[0], Q::one()));
    Posg::build(spec).expect("guess-the-string is well formed")
}

pub fn guess_the_string_matrix(n: usize) -> NormalFormGame {
    NormalFormGame::from_fn(n, n, |a, b| {
        let r = if a == b { -1 } else { 1 };
        [qi(r), qi(-r)]
    })
    .into_zero_sum()
    .expect("zero-sum by construction")
}

/// Three rows of states track whether the prefixes read so far are equal,
/// or differ by exactly one unit in either direction. Observations are
/// trivial, so a policy is one bit per time step.
pub fn bigger_number(k: usize) -> Posg {
    let mut spec = PosgSpec::new(2, 2, true);
    spec.add_metadata("family", "bigger-number");
    spec.add_metadata("k", k.to_string());
    let center: Vec<usize> = (0..k)
        .map(|t| spec.add_state(StateSpec::decision(format!("even{t}"), 0, 0)))
        .collect();
    let up: Vec<usize> = (1..k)
        .map(|t| spec.add_state(StateSpec::decision(format!("ahead{t}"), 0, 0)))
        .collect();
    let down: Vec<usize> = (1..k)
        .map(|t| spec.add_state(StateSpec::decision(format!("behind{t}"), 0, 0)))
        .collect();
    let draw = terminal(&mut spec, "draw".into(), 0);
    let plus2 = terminal(&mut spec, "ahead_by_one".into(), 2);
    let minus2 = terminal(&mut spec, "behind_by_one".into(), -2);
    let last = k - 1;
    for t in 0..k {
        let (next_c, next_u, next_d) = if t == last {
            (draw, plus2, minus2)
        } else {
            (center[t + 1], up[t], down[t])
        };
        spec.add_edges(center[t], &EQUAL, next_c);
        spec.add_edge(center[t], 1, 0, next_u);
        spec.add_edge(center[t], 0, 1, next_d);
    }
    for t in 1..k {
        let win = terminal(&mut spec, format!("ahead_far{t}"), 1);
        let lose = terminal(&mut spec, format!("behind_far{t}"), -1);
        let (u, d) = (up[t - 1], down[t - 1]);
        let (next_u, next_d) = if t == last { (plus2, minus2) } else { (up[t], down[t]) };
        spec.add_edge(u, 0, 1, next_u);
        spec.add_edges(u, &[(0, 0), (1, 0), (1, 1)], win);
        spec.add_edge(d, 1, 0, next_d);
        spec.add_edges(d, &[(0, 0), (0, 1), (1, 1)], lose);
    }
    spec.start.push((center[0], Q::one()));
    Posg::build(spec).expect("bigger-number is well formed")
}

pub fn bigger_number_matrix(n: usize) -> NormalFormGame {
    NormalFormGame::from_fn(n, n, |a, b| {
        let r = match a.cmp(&b) {
            Ordering::Equal => 0,
            Ordering::Greater if a - b == 1 => 2,
            Ordering::Greater => 1,
            Ordering::Less if b - a == 1 => -2,
            Ordering::Less => -1,
        };
        [qi(r), qi(-r)]
    })
    .into_zero_sum()
    .expect("zero-sum by construction")
}

/// The first differing bit decides the winner; equal strings draw.
/// Fully observable.
pub fn weak_bigger_number(k: usize) -> Posg {
    let mut spec = PosgSpec::new(2, 2, true);
    spec.add_metadata("family", "weak-bigger-number");
    spec.add_metadata("k", k.to_string());
    let chain: Vec<usize> = (0..k)
        .map(|t| spec.add_state(StateSpec::decision(format!("s{t}"), t as u32, t as u32)))
        .collect();
    let draw = terminal(&mut spec, "draw".into(), 0);
    for t in 0..k {
        let win = terminal(&mut spec, format!("win{t}"), 1);
        let lose = terminal(&mut spec, format!("lose{t}"), -1);
        let next = chain.get(t + 1).copied().unwrap_or(draw);
        spec.add_edges(chain[t], &EQUAL, next);
        spec.add_edge(chain[t], 1, 0, win);
        spec.add_edge(chain[t], 0, 1, lose);
    }
    spec.start.push((chain[0], Q::one()));
    Posg::build(spec).expect("weak bigger-number is well formed")
}

pub fn weak_bigger_number_matrix(n: usize) -> NormalFormGame {
    NormalFormGame::from_fn(n, n, |a, b| {
        let r = match a.cmp(&b) {
            Ordering::Equal => 0,
            Ordering::Greater => 1,
            Ordering::Less => -1,
        };
        [qi(r), qi(-r)]
    })
    .into_zero_sum()
    .expect("zero-sum by construction")
}
