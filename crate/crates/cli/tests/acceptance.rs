//! Acceptance criteria 1 to 10, one PASS/FAIL line each.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};

use num_bigint::BigUint;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dolab::dynamics::{run_alpha_double_oracle, run_double_oracle, MetaNashMode, ResponseMode, TiebreakPolicy};
use dolab::families::incrementing::canonical_index;
use dolab::families::{generate, matrix_oracle, tiebreak_for_theorem, FamilyId, Theorem};
use dolab::game_format::{read_game, write_game};
use dolab::normal_form::{reduce_dominated, Dominance, NormalFormGame};
use dolab::rational::{q, qi};
use dolab::response::{value_against, ResponseTree};
use dolab::{MixedPolicy, Player, Posg, PurePolicy, Q};
use dolab_cli::config::{Algo, ExperimentConfig, GameSource, InitSpec, LoadedGame};
use dolab_cli::run::run_trial;
use dolab_cli::sweep::{run_sweep, SweepSummary};
use dolab_cli::trace::TraceFile;
use dolab_cli::verify::{verify_theorem, VerdictKind};

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const CAP: u64 = 1 << 20;

fn verify_all(theorem: Theorem, ks: impl IntoIterator<Item = usize>) -> Check {
    for k in ks {
        let (v, _) = verify_theorem(theorem, k).map_err(|e| e.to_string())?;
        ensure!(v.verdict == VerdictKind::Pass, "{theorem} k={k}: {:?}", v.first_failure);
    }
    Ok(())
}

fn same_payoffs(a: &NormalFormGame, b: &NormalFormGame) -> bool {
    a.dims() == b.dims() && Player::BOTH.iter().all(|&p| a.matrix(p) == b.matrix(p))
}

fn criterion_1() -> Check {
    let bigger = |a: i64, b: i64| match a - b {
        0 => 0,
        1 => 2,
        -1 => -2,
        d => d.signum(),
    };
    let weak = |a: i64, b: i64| (a - b).signum();
    let rules: [(FamilyId, &dyn Fn(i64, i64) -> i64); 2] =
        [(FamilyId::BiggerNumber, &bigger), (FamilyId::WeakBiggerNumber, &weak)];
    for (family, rule) in rules {
        for k in 1..=4 {
            let n = 1usize << k;
            let induced = generate(family, k).unwrap().induced_normal_form(CAP).map_err(|e| e.to_string())?;
            ensure!(induced.dims() == (n, n), "{family} k={k}: dims {:?}", induced.dims());
            for a in 0..n {
                for b in 0..n {
                    let r = rule(a as i64, b as i64);
                    ensure!(
                        induced.payoff(Player::One, a, b) == &qi(r) && induced.payoff(Player::Two, a, b) == &qi(-r),
                        "{family} k={k}: entry ({a}, {b})"
                    );
                }
            }
            ensure!(same_payoffs(&induced, &matrix_oracle(family, k).unwrap()), "{family} k={k}: matrix oracle differs");
        }
    }
    Ok(())
}

fn criterion_2() -> Check {
    verify_all(Theorem::T1, 2..=4)
}

fn lexicographic_sweep(k: usize, seeds: u64) -> Result<f64, String> {
    let config = ExperimentConfig {
        game: GameSource::Family {
            family: FamilyId::BiggerNumber,
            k,
        },
        algo: Algo::Do,
        eps: Q::zero(),
        alpha: None,
        init: InitSpec::Random,
        meta_nash: MetaNashMode::Lexicographic,
        best_response: ResponseMode::Lexicographic,
        schedule: None,
        seeds: (0..seeds).collect(),
        max_iters: dolab::dynamics::default_max_iters(k),
    };
    let loaded = LoadedGame::load(&config.game).map_err(|e| e.to_string())?;
    let traces = run_sweep(&config, &loaded, None).map_err(|e| e.to_string())?;
    let stats = SweepSummary::from_traces(&traces);
    ensure!(stats.completed == seeds as usize, "k={k}: only {} of {seeds} trials completed", stats.completed);
    Ok(stats.mean_approx.unwrap())
}

fn criterion_3() -> Check {
    verify_all(Theorem::T2, 2..=5)?;
    let mut means = Vec::new();
    for k in 2..=5 {
        let mean = lexicographic_sweep(k, 100)?;
        let (lo, hi) = ((1u64 << (k - 2)) as f64, (1u64 << (k + 1)) as f64);
        ensure!(lo <= mean && mean <= hi, "k={k}: mean {mean} outside [{lo}, {hi}]");
        means.push(mean);
    }
    for w in means.windows(2) {
        let ratio = w[1] / w[0];
        ensure!((1.7..=2.3).contains(&ratio), "growth ratio {ratio:.3} in means {means:?}");
    }
    Ok(())
}

fn criterion_4() -> Check {
    verify_all(Theorem::T3, 2..=6)
}

fn criterion_5() -> Check {
    let k = 3;
    let n = 1usize << k;
    let game = generate(FamilyId::Incrementing, k).unwrap();
    let induced = game.induced_normal_form(CAP).map_err(|e| e.to_string())?;
    let reduced = reduce_dominated(&induced, Dominance::Weak);
    ensure!(reduced.game.dims() == (n, n), "reduced to {:?}", reduced.game.dims());
    // position of the encoded bitstring x among the survivors
    let mut pos = Vec::new();
    for x in 0..n as u64 {
        let idx = canonical_index(k, x) as usize;
        for p in 0..2 {
            ensure!(reduced.survivors[p].contains(&idx), "bitstring {x} eliminated for P{}", p + 1);
        }
        pos.push(reduced.survivors[0].iter().position(|&s| s == idx).unwrap());
    }
    let at = |p, a: usize, b: usize| reduced.game.payoff(p, pos[a], pos[b]).clone();
    for a in 0..n {
        ensure!(at(Player::One, a, a).is_zero() && at(Player::Two, a, a).is_zero(), "u({a},{a}) nonzero");
        if a + 1 < n {
            let u = [at(Player::One, a + 1, a), at(Player::Two, a + 1, a)];
            ensure!(u == [q(1, 2 * k as i64), qi(-1)], "u({},{a}) = {u:?}", a + 1);
        }
    }
    let enc = |player, x| dolab::families::encode_policy(FamilyId::Incrementing, k, player, x).unwrap();
    for t in 0..n - 1 {
        // (t, t) is a pure equilibrium of the game restricted to 0..=t
        for p in Player::BOTH {
            let here = at(p, t, t);
            for d in 0..=t {
                let dev = if p == Player::One { at(p, d, t) } else { at(p, t, d) };
                ensure!(dev <= here, "P{} gains by {d} against ({t},{t})", p.index() + 1);
            }
            let opp = MixedPolicy::pure(enc(p.other(), t as u64));
            let best = ResponseTree::solve(&game, p, &opp).map_err(|e| e.to_string())?.value().clone();
            let next = value_against(&game, p, &enc(p, t as u64 + 1), &opp).map_err(|e| e.to_string())?;
            ensure!(next == best, "{} is not a best response for P{} at t={t}", t + 1, p.index() + 1);
        }
    }
    verify_all(Theorem::T4, [k])
}

fn criterion_6() -> Check {
    verify_all(Theorem::T5, 2..=6)
}

fn criterion_7() -> Check {
    for alpha in [q(1, 100), q(1, 10)] {
        let g = generate(FamilyId::MatchingPenniesChain, 3).unwrap();
        let tb = tiebreak_for_theorem(Theorem::T5, 3).unwrap();
        let failure = run_alpha_double_oracle(&g, &q(1, 2), &alpha, &tb, 4)
            .err()
            .ok_or("gated pennies schedule completed")?;
        let first = failure.trace.records.first().ok_or("no iteration recorded")?;
        ensure!(first.gated == [false, true], "gating at iteration 1: {:?}", first.gated);
        ensure!(first.improvements[1].is_zero(), "P2 improvement {}", first.improvements[1]);
        ensure!(failure.error.is_legality_failure(), "schedule stopped by {}", failure.error);
    }
    let cases = [(Theorem::T3, 3, qi(1), qi(1)), (Theorem::T2, 3, q(1, 1000), q(1, 1000))];
    for (theorem, k, eps, alpha) in cases {
        let g = generate(theorem.family(), k).unwrap();
        let tb = tiebreak_for_theorem(theorem, k).unwrap();
        let plain = run_double_oracle(&g, &eps, &tb, 64).map_err(|e| e.to_string())?;
        let gated = run_alpha_double_oracle(&g, &eps, &alpha, &tb, 64).map_err(|e| e.to_string())?;
        for r in &plain.records {
            for p in 0..2 {
                ensure!(!r.added[p] || r.improvements[p] >= alpha, "{theorem}: improvement below alpha");
            }
        }
        ensure!(plain.records == gated.records && plain.outcome == gated.outcome, "{theorem}: traces differ");
    }
    Ok(())
}

fn all_policies(game: &Posg, player: Player) -> Vec<PurePolicy> {
    let d = game.domain(player);
    (0..d.policy_count_u64().unwrap()).map(|i| d.policy(i).unwrap()).collect()
}

fn random_mixture(game: &Posg, player: Player, rng: &mut ChaCha8Rng) -> MixedPolicy {
    let n = game.domain(player).policy_count_u64().unwrap();
    let weights: Vec<(PurePolicy, Q)> = (0..rng.gen_range(1..=4))
        .map(|_| (game.policy(player, rng.gen_range(0..n)).unwrap(), qi(rng.gen_range(1..=9))))
        .collect();
    let total: Q = weights.iter().map(|(_, w)| w.clone()).sum();
    MixedPolicy::from_weights(player, weights.into_iter().map(|(p, w)| (p, w / &total)).collect()).unwrap()
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for family in FamilyId::ALL {
        for k in family.min_k()..=4 {
            let game = generate(family, k).unwrap();
            for player in Player::BOTH {
                let pool = all_policies(&game, player);
                for _ in 0..50 {
                    let opp = random_mixture(&game, player.other(), &mut rng);
                    let values: Vec<Q> = pool
                        .iter()
                        .map(|p| {
                            opp.support()
                                .iter()
                                .map(|(o, w)| {
                                    let v = match player {
                                        Player::One => game.evaluate_profile(p, o).unwrap(),
                                        Player::Two => game.evaluate_profile(o, p).unwrap(),
                                    };
                                    &v[player.index()] * w
                                })
                                .sum()
                        })
                        .collect();
                    let best = values.iter().max().unwrap();
                    let mut optimal: Vec<PurePolicy> =
                        pool.iter().zip(&values).filter(|(_, v)| *v == best).map(|(p, _)| p.clone()).collect();
                    let tree = ResponseTree::solve(&game, player, &opp).map_err(|e| e.to_string())?;
                    ensure!(tree.value() == best, "{family} k={k}: value");
                    ensure!(tree.count() == &BigUint::from(optimal.len()), "{family} k={k}: count");
                    let mut listed = tree.enumerate(CAP).map_err(|e| e.to_string())?;
                    listed.sort();
                    optimal.sort();
                    ensure!(listed == optimal, "{family} k={k}: best-response set");
                }
            }
        }
    }
    Ok(())
}

fn criterion_9() -> Check {
    let game = generate(FamilyId::MatchingPenniesChain, 3).unwrap();
    let flat = Posg::from_normal_form(&game.induced_normal_form(CAP).map_err(|e| e.to_string())?);
    let tb = TiebreakPolicy::lexicographic([0, 0]);
    let a = run_double_oracle(&game, &Q::zero(), &tb, 100).map_err(|e| e.to_string())?;
    let b = run_double_oracle(&flat, &Q::zero(), &tb, 100).map_err(|e| e.to_string())?;
    ensure!(a.iterations() == b.iterations(), "iterations {:?} vs {:?}", a.iterations(), b.iterations());
    let sets = |t: &dolab::dynamics::RunTrace| t.records.iter().map(|r| r.policy_sets.clone()).collect::<Vec<_>>();
    ensure!(sets(&a) == sets(&b), "policy sets differ");
    Ok(())
}

fn criterion_10() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_dolab");
    let mut outputs = Vec::new();
    for name in ["a.jsonl", "b.jsonl"] {
        let path = dir.path().join(name);
        let status = Command::new(bin)
            .args(["run", "--family", "bn", "--k", "4", "--init", "random", "--best-response", "seeded-random"])
            .args(["--seed", "7", "--out"])
            .arg(&path)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(status.status.success(), "run failed: {}", String::from_utf8_lossy(&status.stderr));
        outputs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure!(outputs[0] == outputs[1], "repeated runs differ");
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    let trace = TraceFile::from_jsonl(&text)?;
    ensure!(trace.to_jsonl() == text, "trace does not round-trip");

    let config = ExperimentConfig {
        game: GameSource::Family {
            family: FamilyId::BiggerNumber,
            k: 3,
        },
        algo: Algo::Do,
        eps: Q::zero(),
        alpha: None,
        init: InitSpec::Random,
        meta_nash: MetaNashMode::Lexicographic,
        best_response: ResponseMode::SeededRandom,
        schedule: None,
        seeds: (0..24).collect(),
        max_iters: 64,
    };
    let loaded = LoadedGame::load(&config.game).map_err(|e| e.to_string())?;
    let render = |jobs| -> Result<Vec<String>, String> {
        let traces = run_sweep(&config, &loaded, Some(jobs)).map_err(|e| e.to_string())?;
        Ok(traces.iter().map(TraceFile::to_jsonl).collect())
    };
    ensure!(render(1)? == render(4)?, "sweep output depends on the thread count");
    let single = run_trial(&config, &loaded, 5).map_err(|e| e.to_string())?;
    ensure!(single.to_jsonl() == render(3)?[5], "sweep trial differs from a lone run");

    for family in FamilyId::ALL {
        for k in family.min_k()..=4 {
            let text = write_game(&generate(family, k).unwrap());
            let again = write_game(&read_game(&text).map_err(|e| e.to_string())?);
            ensure!(text == again, "{family} k={k}: game file does not round-trip");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("strategic equivalence of the bigger-number games", criterion_1),
        ("guess-the-string needs full supports", criterion_2),
        ("bigger-number uniqueness and random-start growth", criterion_3),
        ("weak bigger-number takes 2^k - 1 iterations", criterion_4),
        ("incrementing game reduction and adversarial run", criterion_5),
        ("matching-pennies chain keeps gap 2/k", criterion_6),
        ("alpha-gated double oracle", criterion_7),
        ("best-response oracle equals enumeration", criterion_8),
        ("representation independence", criterion_9),
        ("determinism and round-trip", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(()) => println!("criterion {:>2}: PASS  {name} ({secs:.1}s)", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name}: {e} ({secs:.1}s)", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

