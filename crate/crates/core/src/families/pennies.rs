//! `k` one-shot states under a uniform start: the first is matching
//! pennies, at the others P2 wins only with (P1 plays 0, P2 plays 1).

use crate::normal_form::NormalFormGame;
use crate::posg::{Posg, PosgSpec, StateSpec};
use crate::rational::{q, qi};

fn p1_reward(state: usize, a1: usize, a2: usize) -> i64 {
    let p2_wins = if state == 0 { a1 != a2 } else { a1 == 0 && a2 == 1 };
    if p2_wins {
        -1
    } else {
        1
    }
}

pub fn matching_pennies_chain(k: usize) -> Posg {
    let mut spec = PosgSpec::new(2, 2, true);
    spec.add_metadata("family", "matching-pennies-chain");
    spec.add_metadata("k", k.to_string());
    for j in 0..k {
        let s = spec.add_state(StateSpec::decision(format!("s{}", j + 1), j as u32, j as u32));
        spec.start.push((s, q(1, k as i64)));
        for a1 in 0..2 {
            for a2 in 0..2 {
                let r = p1_reward(j, a1, a2);
                let z = spec.add_state(StateSpec::terminal(format!("s{}_{a1}{a2}", j + 1), qi(r), qi(-r)));
                spec.add_edge(s, a1, a2, z);
            }
        }
    }
    Posg::build(spec).expect("matching-pennies chain is well formed")
}

/// Normal form over bitstrings; bit `j` (most significant first) is the
/// action at state `s_{j+1}`.
pub fn matching_pennies_chain_matrix(k: usize) -> NormalFormGame {
    let n = 1usize << k;
    NormalFormGame::from_fn(n, n, |x, y| {
        let total: i64 = (0..k)
            .map(|j| {
                let shift = k - 1 - j;
                p1_reward(j, (x >> shift) & 1, (y >> shift) & 1)
            })
            .sum();
        let v = q(total, k as i64);
        [v.clone(), -v]
    })
    .into_zero_sum()
    .expect("zero-sum by construction")
}
