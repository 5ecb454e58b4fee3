use dolab::equilibrium::{restricted_value, solve_zero_sum, verify_equilibrium};
use dolab::families::incrementing::{canonical_index, encode};
use dolab::families::{decode_policy, encode_policy, generate, matrix_oracle, FamilyId};
use dolab::game_format::{read_game, write_game};
use dolab::normal_form::{reduce_dominated, reduce_strictly_dominated, Dominance, NormalFormGame};
use dolab::posg::{MixedPolicy, Player};
use dolab::rational::{q, qi};
use dolab::response::{value_against, ExactOracle, ResponseTree};
use dolab::Q;
use num_traits::Zero;

const CAP: u64 = 1 << 20;

fn same_payoffs(a: &NormalFormGame, b: &NormalFormGame) -> bool {
    a.dims() == b.dims() && Player::BOTH.iter().all(|&p| a.matrix(p) == b.matrix(p))
}

/// Pure profiles from which neither player gains by a pure deviation.
fn pure_equilibria(m: &NormalFormGame) -> Vec<(usize, usize)> {
    let (rows, cols) = m.dims();
    let mut found = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let row_ok = (0..rows).all(|r2| m.payoff(Player::One, r2, c) <= m.payoff(Player::One, r, c));
            let col_ok = (0..cols).all(|c2| m.payoff(Player::Two, r, c2) <= m.payoff(Player::Two, r, c));
            if row_ok && col_ok {
                found.push((r, c));
            }
        }
    }
    found
}

#[test]
fn induced_normal_forms_match_the_oracles() {
    for family in [
        FamilyId::GuessTheString,
        FamilyId::BiggerNumber,
        FamilyId::WeakBiggerNumber,
        FamilyId::MatchingPenniesChain,
    ] {
        for k in family.min_k()..=4 {
            let induced = generate(family, k).unwrap().induced_normal_form(CAP).unwrap();
            let oracle = matrix_oracle(family, k).unwrap();
            assert!(same_payoffs(&induced, &oracle), "{family} k={k}");
        }
    }
}

#[test]
fn incrementing_reduces_to_the_bitstring_game() {
    for k in 2..=3 {
        let n = 1usize << k;
        let induced = generate(FamilyId::Incrementing, k).unwrap().induced_normal_form(CAP).unwrap();
        let reduced = reduce_dominated(&induced, Dominance::Weak);
        assert_eq!(reduced.game.dims(), (n, n), "k={k}");
        let oracle = matrix_oracle(FamilyId::Incrementing, k).unwrap();
        let pos: Vec<usize> = (0..n as u64)
            .map(|x| {
                let idx = canonical_index(k, x) as usize;
                reduced.survivors[0].iter().position(|&s| s == idx).unwrap()
            })
            .collect();
        assert_eq!(reduced.survivors[0], reduced.survivors[1]);
        for a in 0..n {
            for b in 0..n {
                for p in Player::BOTH {
                    assert_eq!(reduced.game.payoff(p, pos[a], pos[b]), oracle.payoff(p, a, b));
                }
            }
        }
        for a in 0..n {
            assert_eq!(oracle.payoff(Player::One, a, a), &Q::zero());
            if a + 1 < n {
                assert_eq!(oracle.payoff(Player::One, a + 1, a), &q(1, 2 * k as i64));
                assert_eq!(oracle.payoff(Player::Two, a + 1, a), &qi(-1));
            }
        }
    }
    // duplicated payoff-equivalent policies survive strict elimination
    let induced = generate(FamilyId::Incrementing, 3).unwrap().induced_normal_form(CAP).unwrap();
    assert!(reduce_strictly_dominated(&induced).game.dims().0 > 8);
}

#[test]
fn incrementing_restrictions_climb() {
    let k = 3;
    let n = 1u64 << k;
    let game = generate(FamilyId::Incrementing, k).unwrap();
    let oracle = matrix_oracle(FamilyId::Incrementing, k).unwrap();
    for t in 0..n - 1 {
        let sub: Vec<usize> = (0..=t as usize).collect();
        let restricted = oracle.restrict(&sub, &sub);
        assert!(pure_equilibria(&restricted).contains(&(t as usize, t as usize)), "t={t}");
        for player in Player::BOTH {
            let opp = MixedPolicy::pure(encode(k, player.other(), t));
            let best = ResponseTree::solve(&game, player, &opp).unwrap().value().clone();
            let next = encode(k, player, t + 1);
            assert_eq!(value_against(&game, player, &next, &opp).unwrap(), best, "t={t}");
        }
    }
}

#[test]
fn encodings_roundtrip() {
    for family in FamilyId::ALL {
        for k in family.min_k()..=5 {
            let game = generate(family, k).unwrap();
            for x in 0..family.strategy_count(k) {
                for player in Player::BOTH {
                    let p = encode_policy(family, k, player, x).unwrap();
                    game.domain(player).check(&p).unwrap();
                    assert_eq!(decode_policy(family, k, &p).unwrap(), x);
                }
            }
        }
    }
}

#[test]
fn game_files_roundtrip() {
    for family in FamilyId::ALL {
        for k in family.min_k()..=4 {
            let text = write_game(&generate(family, k).unwrap());
            let again = write_game(&read_game(&text).unwrap());
            assert_eq!(text, again, "{family} k={k}");
        }
    }
}

#[test]
fn guess_the_string_examples() {
    let g = generate(FamilyId::GuessTheString, 2).unwrap();
    let enc = |p, x| encode_policy(FamilyId::GuessTheString, 2, p, x).unwrap();
    assert_eq!(g.evaluate_profile(&enc(Player::One, 3), &enc(Player::Two, 3)).unwrap(), [qi(-1), qi(1)]);
    assert_eq!(g.evaluate_profile(&enc(Player::One, 0), &enc(Player::Two, 2)).unwrap(), [qi(1), qi(-1)]);
}

#[test]
fn guess_the_string_needs_every_string() {
    for k in 1..=3 {
        let m = matrix_oracle(FamilyId::GuessTheString, k).unwrap();
        let n = 1usize << k;
        let full = solve_zero_sum(&m).unwrap().values;
        for player in Player::BOTH {
            for dropped in 0..n {
                let keep: Vec<usize> = (0..n).filter(|&i| i != dropped).collect();
                assert!(restricted_value(&m, player, &keep) < full[player.index()], "k={k}");
            }
        }
    }
}

#[test]
fn bigger_number_entries() {
    let m = matrix_oracle(FamilyId::BiggerNumber, 2).unwrap();
    let u = |a, b| m.payoff(Player::One, a, b).clone();
    assert_eq!([u(2, 1), u(3, 1), u(1, 1), u(1, 2)], [qi(2), qi(1), qi(0), qi(-2)]);
    let w = matrix_oracle(FamilyId::WeakBiggerNumber, 2).unwrap();
    let v = |a, b| w.payoff(Player::One, a, b).clone();
    assert_eq!([v(2, 1), v(1, 2), v(3, 3)], [qi(1), qi(-1), qi(0)]);
    for k in 1..=4 {
        let n = 1usize << k;
        assert_eq!(pure_equilibria(&matrix_oracle(FamilyId::WeakBiggerNumber, k).unwrap()), vec![(n - 1, n - 1)]);
        assert!(!pure_equilibria(&matrix_oracle(FamilyId::BiggerNumber, k).unwrap()).is_empty());
    }
    let inc = matrix_oracle(FamilyId::Incrementing, 3).unwrap();
    assert!(pure_equilibria(&inc).contains(&(7, 7)));
}

#[test]
fn pennies_chain_values() {
    let g = generate(FamilyId::MatchingPenniesChain, 3).unwrap();
    let enc = |p, x| encode_policy(FamilyId::MatchingPenniesChain, 3, p, x).unwrap();
    assert_eq!(g.evaluate_profile(&enc(Player::One, 7), &enc(Player::Two, 0)).unwrap(), [q(1, 3), q(-1, 3)]);
    assert_eq!(g.evaluate_profile(&enc(Player::One, 0), &enc(Player::Two, 7)).unwrap(), [qi(-1), qi(1)]);
    for k in 2..=6 {
        let g = generate(FamilyId::MatchingPenniesChain, k).unwrap();
        let n = 1u64 << k;
        let half = q(1, 2);
        let enc = |p, x| encode_policy(FamilyId::MatchingPenniesChain, k, p, x).unwrap();
        let m1 = MixedPolicy::new(Player::One, vec![(enc(Player::One, n / 2 - 1), half.clone()), (enc(Player::One, n - 1), half.clone())]).unwrap();
        let m2 = MixedPolicy::new(Player::Two, vec![(enc(Player::Two, 0), half.clone()), (enc(Player::Two, n / 2), half.clone())]).unwrap();
        let cert = verify_equilibrium(&g, &m1, &m2, &Q::zero(), &ExactOracle).unwrap();
        assert!(cert.passed, "k={k}");
        assert_eq!(g.evaluate_mixed(&m1, &m2).unwrap()[0], Q::from_integer(1.into()) - q(1, k as i64));
        assert!(pure_equilibria(&matrix_oracle(FamilyId::MatchingPenniesChain, k).unwrap()).is_empty());
    }
}
