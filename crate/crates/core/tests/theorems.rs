use dolab::dynamics::{default_max_iters, run_alpha_double_oracle, run_double_oracle, Choice, RunError, RunTrace};
use dolab::families::{generate, tiebreak_for_theorem, FamilyId, Theorem};
use dolab::rational::{q, qi};
use dolab::Q;
use num_traits::Zero;

fn assert_grows(trace: &RunTrace) {
    for (a, b) in trace.records.iter().zip(trace.records.iter().skip(1)) {
        for p in 0..2 {
            assert!(b.policy_sets[p].starts_with(&a.policy_sets[p]));
        }
    }
    let last = trace.records.len() - 1;
    for r in &trace.records[..last] {
        assert!(r.added[0] || r.added[1], "iteration {} added nothing", r.iteration);
    }
}

#[test]
fn weak_bigger_number_takes_all_but_one_step() {
    for k in 2..=6 {
        let g = generate(FamilyId::WeakBiggerNumber, k).unwrap();
        let tb = tiebreak_for_theorem(Theorem::T3, k).unwrap();
        let t = run_double_oracle(&g, &qi(1), &tb, default_max_iters(k)).unwrap();
        assert_eq!(t.iterations(), Some((1 << k) - 1), "k={k}");
        assert!(t.outcome.as_ref().unwrap().converged);
        assert_grows(&t);
        for r in &t.records[..t.records.len() - 1] {
            assert_eq!(r.response_choices, [Choice::Scripted; 2]);
            assert!(r.max_index[1] <= r.max_index[0] + 1);
        }
    }
}

#[test]
fn pennies_chain_gap_stays_at_two_over_k() {
    for k in 2..=6 {
        let g = generate(FamilyId::MatchingPenniesChain, k).unwrap();
        let tb = tiebreak_for_theorem(Theorem::T5, k).unwrap();
        let half = 1usize << (k - 1);
        let failure = run_double_oracle(&g, &Q::zero(), &tb, half).unwrap_err();
        assert_eq!(failure.error, RunError::MaxItersExceeded(half), "k={k}");
        let t = failure.trace;
        assert_eq!(t.records.len(), half);
        for r in &t.records {
            assert_eq!(r.gap, q(2, k as i64), "k={k} t={}", r.iteration);
            assert_eq!(r.meta_nash_choice, Choice::Scripted);
            assert_eq!(r.response_choices[0], Choice::Scripted);
        }
        assert_grows(&t);
    }
}

#[test]
fn pennies_chain_schedule_is_blocked_by_gating() {
    for alpha in [q(1, 100), q(1, 10)] {
        let g = generate(FamilyId::MatchingPenniesChain, 3).unwrap();
        let tb = tiebreak_for_theorem(Theorem::T5, 3).unwrap();
        let failure = run_alpha_double_oracle(&g, &q(1, 2), &alpha, &tb, 4).unwrap_err();
        let first = &failure.trace.records[0];
        assert_eq!(first.improvements[1], Q::zero());
        assert_eq!(first.gated, [false, true]);
        assert!(failure.error.is_legality_failure(), "{}", failure.error);
    }
}

#[test]
fn gating_below_the_gap_changes_nothing() {
    let g = generate(FamilyId::WeakBiggerNumber, 3).unwrap();
    let tb = tiebreak_for_theorem(Theorem::T3, 3).unwrap();
    let plain = run_double_oracle(&g, &qi(1), &tb, 32).unwrap();
    let gated = run_alpha_double_oracle(&g, &qi(1), &qi(1), &tb, 32).unwrap();
    assert_eq!(plain.records, gated.records);
    assert_eq!(plain.outcome, gated.outcome);
}

#[test]
fn incrementing_walks_every_bitstring() {
    let k = 3;
    let g = generate(FamilyId::Incrementing, k).unwrap();
    let tb = tiebreak_for_theorem(Theorem::T4, k).unwrap();
    let eps = q(1, 2 * k as i64 + 1);
    let t = run_double_oracle(&g, &eps, &tb, default_max_iters(k)).unwrap();
    assert_eq!(t.iterations(), Some((1 << k) - 1));
    for r in &t.records[..t.records.len() - 1] {
        assert_eq!(r.gap, q(1, k as i64));
    }
}

#[test]
fn bigger_number_choices_are_unique() {
    for k in 2..=5 {
        let g = generate(FamilyId::BiggerNumber, k).unwrap();
        let tb = tiebreak_for_theorem(Theorem::T2, k).unwrap();
        let t = run_double_oracle(&g, &Q::zero(), &tb, default_max_iters(k)).unwrap();
        for r in &t.records {
            assert_eq!(r.meta_nash_unique, Some(true));
            assert_eq!(r.response_counts, ["1".to_string(), "1".to_string()]);
            assert!(r.max_index[1] <= r.max_index[0] + 1);
        }
    }
    let g = generate(FamilyId::BiggerNumber, 2).unwrap();
    let t = run_double_oracle(&g, &Q::zero(), &tiebreak_for_theorem(Theorem::T2, 2).unwrap(), 16).unwrap();
    let added: Vec<u64> = t.records.iter().filter(|r| r.added[0]).map(|r| r.responses[0]).collect();
    assert_eq!(added, vec![1, 2, 3]);
}

#[test]
fn guess_the_string_needs_full_supports() {
    for k in 2..=4 {
        let g = generate(FamilyId::GuessTheString, k).unwrap();
        let tb = tiebreak_for_theorem(Theorem::T1, k).unwrap();
        let t = run_double_oracle(&g, &Q::zero(), &tb, default_max_iters(k)).unwrap();
        let last = t.records.last().unwrap();
        assert_eq!(last.gap, Q::zero());
        assert_eq!(last.policy_sets[0].len(), 1 << k);
        assert_eq!(last.policy_sets[1].len(), 1 << k);
        for r in &t.records[..t.records.len() - 1] {
            assert!(r.gap > Q::zero());
        }
        // the record of iteration 2t + 1 holds the profile reached after 2t iterations
        for r in t.records.iter().skip(2).step_by(2) {
            let half = (r.iteration / 2) as i64;
            assert_eq!(r.policy_sets[0], r.policy_sets[1], "k={k} t={}", r.iteration);
            assert!(r.gap <= q(2, half), "k={k} t={}", r.iteration);
        }
    }
}
