//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.
//!
//! Run alone with `cargo test -p qot-core --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use qot_core::harness::{run_records, run_session, ExperimentConfig, SessionOptions, SessionSeeds};
use qot_core::hashing::{hash, sample_hash, BitString};
use qot_core::permgroup::{factorial, involution_count, Permutation};
use qot_core::protocol::{AliceStrategy, BobStrategy, ProtocolParams, Side};
use qot_core::qscd::{
    circuit_branches, convert_sign, decode_bit, distinguish_circuit, encode_bit, generate_plus, measure_bit,
    measure_pm, measurement_branches,
};
use qot_core::qsim::oracle::verify_identities;
use qot_core::qsim::{PlusMinus, RegisterLayout, SparseState};
use qot_core::run_experiment;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn other_key<R: Rng>(rng: &mut R, pi: &Permutation) -> Permutation {
    loop {
        let k = Permutation::random_involution(rng, pi.degree()).unwrap();
        if k != *pi {
            return k;
        }
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn trapdoor_certainty() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let trials = 10_000;
    let (mut circuit_ok, mut measure_ok) = (0, 0);
    for _ in 0..trials {
        let pi = Permutation::random_involution(&mut rng, 6).unwrap();
        let plus = generate_plus(&pi, &mut rng).unwrap();
        let minus = convert_sign(&generate_plus(&pi, &mut rng).unwrap()).unwrap();
        for (sample, label) in [(&plus, 0u8), (&minus, 1u8)] {
            circuit_ok += (distinguish_circuit(&pi, sample, &mut rng).unwrap().0 == label) as usize;
            measure_ok += (measure_bit(&pi, sample, &mut rng).unwrap().0 == label) as usize;
        }
    }
    let elapsed = start.elapsed();
    ensure(circuit_ok == 2 * trials, || {
        format!("circuit path {circuit_ok}/{}", 2 * trials)
    })?;
    ensure(measure_ok == 2 * trials, || {
        format!("measurement path {measure_ok}/{}", 2 * trials)
    })?;
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!(
        "circuit {circuit_ok}/{0}, measurement {measure_ok}/{0}, {elapsed:.2?}",
        2 * trials
    ))
}

fn wrong_key_flatness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let trials = 10_000;
    let mut correct = 0;
    for _ in 0..trials {
        let pi = Permutation::random_involution(&mut rng, 6).unwrap();
        let wrong = other_key(&mut rng, &pi);
        let bit = rng.random_range(0..2u8);
        let sample = encode_bit(bit, &pi, &mut rng).unwrap();
        let (outcome, _) = measure_pm(&wrong, &sample, &mut rng).unwrap();
        correct += (decode_bit(outcome) == bit) as usize;
    }
    let accuracy = correct as f64 / trials as f64;
    ensure((accuracy - 0.5).abs() <= 0.015, || format!("accuracy {accuracy}"))?;

    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let pi = Permutation::random_involution(&mut rng, 6).unwrap();
        let wrong = other_key(&mut rng, &pi);
        let sigma = Permutation::random(&mut rng, 6).unwrap();
        for sign in [PlusMinus::Plus, PlusMinus::Minus] {
            let psi = SparseState::psi(&pi, &sigma, sign).unwrap();
            let [plus, minus] = measurement_branches(&wrong, &psi).unwrap();
            worst = worst
                .max((plus.probability - 0.5).abs())
                .max((minus.probability - 0.5).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("projection norm off by {worst:e}"))?;
    Ok(format!(
        "accuracy {accuracy:.4} over {trials}, max |‖P ψ‖² − 1/2| = {worst:.1e}"
    ))
}

fn circuit_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let layout = RegisterLayout::single(6).unwrap();
    let (mut prob_dev, mut state_dev): (f64, f64) = (0.0, 0.0);
    for _ in 0..200 {
        let pi = Permutation::random_involution(&mut rng, 6).unwrap();
        let support = rng.random_range(1..=60);
        let s = SparseState::random(layout, support, &mut rng).unwrap();
        let circuit = circuit_branches(&pi, &s).unwrap();
        let measured = measurement_branches(&pi, &s).unwrap();
        for (a, b) in circuit.iter().zip(measured.iter()) {
            prob_dev = prob_dev.max((a.probability - b.probability).abs());
            match (&a.state, &b.state) {
                (Some(x), Some(y)) => {
                    let d = x
                        .phase_distance(y)
                        .ok_or("post-measurement states are orthogonal or differ in layout")?;
                    state_dev = state_dev.max(d);
                }
                (None, None) => {}
                _ => return Err("one path has a zero branch the other lacks".into()),
            }
        }
    }
    ensure(prob_dev <= 1e-9, || format!("probabilities differ by {prob_dev:e}"))?;
    ensure(state_dev <= 1e-9, || {
        format!("post-measurement states differ by {state_dev:e}")
    })?;
    Ok(format!(
        "200 states, max probability gap {prob_dev:.1e}, max phase-aligned state gap {state_dev:.1e}"
    ))
}

fn dense_oracle() -> Outcome {
    let start = Instant::now();
    let pi = Permutation::parse_cycles(6, "(1 4)(2 6)(3 5)").unwrap();
    let other = Permutation::parse_cycles(6, "(1 2)(3 4)(5 6)").unwrap();
    let checks = verify_identities(&pi, Some(&other)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let failed: Vec<_> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} ({:e})", c.name, c.deviation))
        .collect();
    ensure(failed.is_empty(), || format!("failed: {}", failed.join(", ")))?;
    within(elapsed, Duration::from_secs(60))?;
    let worst = checks.iter().map(|c| c.deviation).fold(0.0, f64::max);
    Ok(format!(
        "{} identities, max deviation {worst:.1e}, {elapsed:.2?}",
        checks.len()
    ))
}

fn honest_transfer_rate() -> Outcome {
    let params = ProtocolParams::new(6, 32).unwrap();
    let n = 10_000;
    let config = ExperimentConfig::new(params, AliceStrategy::Honest, BobStrategy::Honest, n, 5);
    let records = run_records(&config).map_err(|e| e.to_string())?;
    let received = records.iter().filter(|r| r.bob_received).count();
    let collisions = records.iter().filter(|r| r.hash_collision).count();
    let unexplained = records
        .iter()
        .filter(|r| r.bob_received != r.gamma_equals_pi && !r.hash_collision)
        .count();
    let outside_k = records.iter().filter(|r| r.gamma_in_k != Some(true)).count();
    let rate = received as f64 / n as f64;
    // Mismatched sides still give γ = π when τ centralizes π: 2^3·3! = 48 of 720.
    let analytic = 0.5 + 0.5 * 48.0 / 720.0;
    ensure((0.485..=0.515).contains(&rate), || {
        format!(
            "received fraction {rate:.4} ({received}/{n}); uniform τ gives 1/2 + 48/1440 = {analytic:.4}, \
             collisions {collisions}, unexplained {unexplained}"
        )
    })?;
    ensure(unexplained == 0, || {
        format!("{unexplained} sessions break received ⇔ γ = π")
    })?;
    ensure(collisions <= 5, || format!("{collisions} hash collisions"))?;
    ensure(outside_k == 0, || format!("{outside_k} sessions with γ ∉ K_n"))?;
    Ok(format!(
        "received {received}/{n} = {rate:.4}, collisions {collisions} (expected ≤ {:.2})",
        n as f64 / 65536.0
    ))
}

fn step9_behaviour() -> Outcome {
    let honest = ExperimentConfig::new(
        ProtocolParams::new(6, 64).unwrap(),
        AliceStrategy::Honest,
        BobStrategy::Honest,
        20_000,
        6,
    );
    let records = run_records(&honest).map_err(|e| e.to_string())?;
    let matched: Vec<_> = records.iter().filter(|r| r.gamma_equals_pi).collect();
    let aborted = matched.iter().filter(|r| r.bob_aborted_cheat).count();
    let rate = aborted as f64 / matched.len() as f64;
    ensure(rate <= 0.005, || {
        format!("honest abort rate {rate} over {}", matched.len())
    })?;

    let cheat = ExperimentConfig::new(
        ProtocolParams::new(6, 32).unwrap(),
        AliceStrategy::InvariantCheat,
        BobStrategy::Honest,
        1000,
        7,
    );
    let records = run_records(&cheat).map_err(|e| e.to_string())?;
    let caught = records.iter().filter(|r| r.aborted && r.hamming_d == Some(0)).count();
    ensure(caught == 1000, || format!("invariant cheat aborted {caught}/1000"))?;
    Ok(format!(
        "honest γ = π abort rate {rate:.4} ({aborted}/{}) at ℓ = 64, invariant cheat aborted {caught}/1000 with d = 0",
        matched.len()
    ))
}

fn mixed_cheat() -> Outcome {
    let n = 10_000;
    let config = ExperimentConfig::new(
        ProtocolParams::new(6, 32).unwrap(),
        AliceStrategy::MixedCheat,
        BobStrategy::Honest,
        n,
        8,
    );
    let stats = run_experiment(&config).map_err(|e| e.to_string())?;
    let rejected = (stats.sessions - stats.received) as f64 / n as f64;
    ensure(rejected >= 0.999, || format!("not received in only {rejected}"))?;
    Ok(format!(
        "not received in {} of {n} sessions",
        stats.sessions - stats.received
    ))
}

fn obliviousness() -> Outcome {
    let params = ProtocolParams::new(6, 32).unwrap();
    let mut split = 0;
    for i in 0..100 {
        let seeds = SessionSeeds::derive(9, i);
        let run = |side| {
            run_session(
                &params,
                AliceStrategy::Honest,
                BobStrategy::Honest,
                seeds,
                &SessionOptions {
                    bob_side: Some(side),
                    ..Default::default()
                },
            )
            .unwrap()
        };
        let (right, left) = (run(Side::Right), run(Side::Left));
        ensure(right.transcript.alice_view() == left.transcript.alice_view(), || {
            format!("Alice's view differs across Bob's coin in session {i}")
        })?;
        split += (right.record.gamma_equals_pi != left.record.gamma_equals_pi) as usize;
    }
    ensure(split > 0, || "Bob's coin never changed γ".into())?;
    Ok(format!(
        "100 Alice views byte-identical across both coins ({split} pairs with γ = π on exactly one branch)"
    ))
}

fn foundations() -> Outcome {
    let k6 = Permutation::all_involutions(6).map_err(|e| e.to_string())?;
    let brute = Permutation::all(6)
        .unwrap()
        .filter(|p| p.is_fixed_point_free_involution())
        .count();
    ensure(k6.len() == 15 && brute == 15 && involution_count(6) == 15, || {
        format!("|K_6| = {} (enumerated {brute})", k6.len())
    })?;
    let stated = factorial(6) / factorial(3);

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..10_000 {
        let a = Permutation::random(&mut rng, 6).unwrap();
        let b = Permutation::random(&mut rng, 6).unwrap();
        ensure(a.compose(&b).unwrap().sign() == a.sign() * b.sign(), || {
            format!("sign({a} ∘ {b}) is not multiplicative")
        })?;
    }

    let trials = 100_000u64;
    let mut collisions = 0u64;
    for _ in 0..trials {
        let x = BitString::random(&mut rng, 16);
        let y = loop {
            let y = BitString::random(&mut rng, 16);
            if y != x {
                break y;
            }
        };
        let h = sample_hash(16, &mut rng).unwrap();
        collisions += (hash(&h, &x).unwrap() == hash(&h, &y).unwrap()) as u64;
    }
    let p = 1.0 / 256.0;
    let limit = trials as f64 * p + 3.0 * (trials as f64 * p * (1.0 - p)).sqrt();
    ensure(collisions as f64 <= limit, || {
        format!("{collisions} collisions > {limit:.1}")
    })?;

    let mut round_trips = 0;
    for (i, p) in Permutation::all(6).unwrap().enumerate() {
        let rank = p.rank();
        ensure(
            rank.value == i as u64 && Permutation::unrank(rank).unwrap() == p,
            || format!("Lehmer round trip fails at {p}"),
        )?;
        round_trips += 1;
    }
    ensure(round_trips == 720, || format!("enumerated {round_trips} permutations"))?;
    Ok(format!(
        "|K_6| = 15 by enumeration (the closed form n!/(n/2)! gives {stated}; the count is (n-1)!! = 15); \
         sign multiplicative on 10^4 pairs; {collisions}/{trials} collisions at ℓ = 16 (limit {limit:.1}); \
         Lehmer round trip over 720 permutations"
    ))
}

fn determinism() -> Outcome {
    let config = ExperimentConfig::new(
        ProtocolParams::new(6, 32).unwrap(),
        AliceStrategy::Honest,
        BobStrategy::Premeasure,
        3000,
        11,
    );
    let one = run_experiment(&config.clone().with_parallelism(1)).map_err(|e| e.to_string())?;
    let eight = run_experiment(&config.clone().with_parallelism(8)).map_err(|e| e.to_string())?;
    let rerun = run_experiment(&config.with_parallelism(8)).map_err(|e| e.to_string())?;
    for (label, other) in [("parallelism 8", &eight), ("re-run", &rerun)] {
        ensure(one.to_json() == other.to_json(), || {
            format!("JSON stats differ ({label})")
        })?;
        ensure(one.to_csv() == other.to_csv(), || format!("CSV stats differ ({label})"))?;
    }
    Ok(format!(
        "JSON ({} bytes) and CSV identical at parallelism 1, 8 and a re-run at 8",
        one.to_json().len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("trapdoor distinguishing certainty", trapdoor_certainty),
        ("wrong-key flatness", wrong_key_flatness),
        ("circuit/measurement equivalence", circuit_equivalence),
        ("dense-oracle suite", dense_oracle),
        ("honest transfer rate", honest_transfer_rate),
        ("step-9 behaviour", step9_behaviour),
        ("mixed-state cheat", mixed_cheat),
        ("obliviousness transcript identity", obliviousness),
        ("permutation and hash foundations", foundations),
        ("determinism across parallelism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{elapsed:.1?}]", i + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {why} [{elapsed:.1?}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
