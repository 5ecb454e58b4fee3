use dolab::families::{generate, FamilyId};
use dolab::posg::{MixedPolicy, Player, Posg, PurePolicy};
use dolab::rational::qi;
use dolab::response::ResponseTree;
use dolab::Q;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn all_policies(game: &Posg, player: Player) -> Vec<PurePolicy> {
    let d = game.domain(player);
    (0..d.policy_count_u64().unwrap()).map(|i| d.policy(i).unwrap()).collect()
}

fn random_mixture(game: &Posg, player: Player, rng: &mut ChaCha8Rng) -> MixedPolicy {
    let n = game.domain(player).policy_count_u64().unwrap();
    let size = rng.gen_range(1..=4);
    let weights = (0..size)
        .map(|_| {
            let p = game.policy(player, rng.gen_range(0..n)).unwrap();
            (p, Q::from_integer(rng.gen_range(1..=9).into()))
        })
        .collect::<Vec<_>>();
    let total: Q = weights.iter().map(|(_, w)| w.clone()).sum();
    let normalized = weights.into_iter().map(|(p, w)| (p, w / &total)).collect();
    MixedPolicy::from_weights(player, normalized).unwrap()
}

/// Value of `policy` against `opp`, summed profile by profile.
fn brute_value(game: &Posg, player: Player, policy: &PurePolicy, opp: &MixedPolicy) -> Q {
    opp.support()
        .iter()
        .map(|(o, w)| {
            let v = match player {
                Player::One => game.evaluate_profile(policy, o).unwrap(),
                Player::Two => game.evaluate_profile(o, policy).unwrap(),
            };
            &v[player.index()] * w
        })
        .sum()
}

#[test]
fn best_responses_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for family in FamilyId::ALL {
        for k in family.min_k()..=4 {
            let game = generate(family, k).unwrap();
            let pools = [all_policies(&game, Player::One), all_policies(&game, Player::Two)];
            for _ in 0..50 {
                for player in Player::BOTH {
                    let opp = random_mixture(&game, player.other(), &mut rng);
                    let values: Vec<Q> = pools[player.index()]
                        .iter()
                        .map(|p| brute_value(&game, player, p, &opp))
                        .collect();
                    let best = values.iter().max().unwrap().clone();
                    let optimal: Vec<PurePolicy> = pools[player.index()]
                        .iter()
                        .zip(&values)
                        .filter(|(_, v)| **v == best)
                        .map(|(p, _)| p.clone())
                        .collect();
                    let tree = ResponseTree::solve(&game, player, &opp).unwrap();
                    assert_eq!(tree.value(), &best, "{family} k={k}");
                    assert_eq!(tree.count(), &BigUint::from(optimal.len()), "{family} k={k}");
                    assert_eq!(tree.lexicographic(), optimal[0]);
                    let mut listed = tree.enumerate(10_000).unwrap();
                    listed.sort();
                    let mut expected = optimal.clone();
                    expected.sort();
                    assert_eq!(listed, expected, "{family} k={k}");
                    assert!(optimal.contains(&tree.sample(&mut rng)));
                }
            }
        }
    }
}

fn family_strategy() -> impl Strategy<Value = (FamilyId, usize)> {
    (0usize..5).prop_flat_map(|f| {
        let family = FamilyId::ALL[f];
        (Just(family), family.min_k()..=4)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profiles_conserve_mass((family, k) in family_strategy(), a in any::<u64>(), b in any::<u64>()) {
        let game = generate(family, k).unwrap();
        let n1 = game.domain(Player::One).policy_count_u64().unwrap();
        let n2 = game.domain(Player::Two).policy_count_u64().unwrap();
        let p1 = game.policy(Player::One, a % n1).unwrap();
        let p2 = game.policy(Player::Two, b % n2).unwrap();
        let layers = game.profile_layers(&p1, &p2).unwrap();
        for layer in &layers {
            prop_assert_eq!(&layer.live + &layer.absorbed, Q::one());
        }
        prop_assert!(layers.last().unwrap().live.is_zero());
        if game.is_zero_sum() {
            let v = game.evaluate_profile(&p1, &p2).unwrap();
            prop_assert_eq!(&v[0] + &v[1], Q::zero());
        }
    }

    #[test]
    fn mixed_values_are_bilinear((family, k) in family_strategy(), seed in any::<u64>()) {
        let game = generate(family, k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m1 = random_mixture(&game, Player::One, &mut rng);
        let m2 = random_mixture(&game, Player::Two, &mut rng);
        let mixed = game.evaluate_mixed(&m1, &m2).unwrap();
        let mut expected = [Q::zero(), Q::zero()];
        for (p1, w1) in m1.support() {
            for (p2, w2) in m2.support() {
                let v = game.evaluate_profile(p1, p2).unwrap();
                for i in 0..2 {
                    expected[i] += &v[i] * w1 * w2;
                }
            }
        }
        prop_assert_eq!(mixed, expected);
    }

    #[test]
    fn best_response_value_dominates((family, k) in family_strategy(), seed in any::<u64>()) {
        let game = generate(family, k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let opp = random_mixture(&game, Player::Two, &mut rng);
        let tree = ResponseTree::solve(&game, Player::One, &opp).unwrap();
        let witness = tree.lexicographic();
        prop_assert_eq!(&brute_value(&game, Player::One, &witness, &opp), tree.value());
        let n = game.domain(Player::One).policy_count_u64().unwrap();
        let other = game.policy(Player::One, rng.gen_range(0..n)).unwrap();
        prop_assert!(brute_value(&game, Player::One, &other, &opp) <= *tree.value());
        prop_assert!(*tree.count() >= BigUint::one());
        prop_assert!(tree.value() <= &qi(2));
    }
}
