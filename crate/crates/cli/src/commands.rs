use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use qot_core::harness::{run_experiment, run_session, ExperimentConfig, Rate, SessionSeeds};
use qot_core::permgroup::Permutation;
use qot_core::protocol::{validate_degree, AliceStrategy, ProtocolParams, MAX_INVARIANT_DEGREE};
use qot_core::qscd::{circuit_branches, distinguish_circuit, encode_bit, majority, measure_bit, measurement_branches};
use qot_core::qsim::oracle::{verify_identities, MAX_ORACLE_DEGREE};
use qot_core::{Inspector, QscdSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{Common, DistinguishArgs, ExperimentArgs, Format, ProtocolArgs, SessionArgs};

pub const MAX_ENUMERATE_DEGREE: usize = 10;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

macro_rules! say_raw {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout().lock(), $($arg)*);
    }};
}

type CliResult = Result<(), CliError>;

fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn failure(e: impl fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

fn resolve_output(common: &Common, default_name: &str) -> PathBuf {
    match (&common.output, &common.output_dir) {
        (Some(p), _) if p.is_absolute() => p.clone(),
        (Some(p), Some(dir)) => dir.join(p),
        (Some(p), None) => p.clone(),
        (None, Some(dir)) => dir.join(default_name),
        (None, None) => PathBuf::from(default_name),
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| failure(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, contents).map_err(|e| failure(format!("{}: {e}", path.display())))
}

fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn protocol_params(common: &Common, p: &ProtocolArgs) -> Result<ProtocolParams, CliError> {
    let params = ProtocolParams::new(common.n, p.ell)
        .and_then(|q| q.with_threshold(p.threshold_sigmas))
        .and_then(|q| q.with_copies(p.copies))
        .map_err(usage)?;
    if p.alice == AliceStrategy::InvariantCheat && common.n > MAX_INVARIANT_DEGREE {
        return Err(usage(format!(
            "invariant-cheat materializes all of S_n and needs n ≤ {MAX_INVARIANT_DEGREE}"
        )));
    }
    Ok(params)
}

pub fn session(args: &SessionArgs) -> CliResult {
    let common = &args.common;
    if common.format != Format::Json {
        return Err(usage("session transcripts are written as JSON lines only"));
    }
    let params = protocol_params(common, &args.protocol)?;
    let seeds = SessionSeeds::derive(common.seed, 0);
    let outcome = run_session(
        &params,
        args.protocol.alice,
        args.protocol.bob,
        seeds,
        &Default::default(),
    )
    .map_err(failure)?;
    let path = resolve_output(common, &format!("session-{}.jsonl", common.seed));
    write_file(&path, &outcome.transcript.to_jsonl())?;
    if args.dump_states {
        let inspector = Inspector::privileged();
        let mut dump = String::new();
        for &h in outcome.transfer.iter().flat_map(|t| &t.handles) {
            if let Some(sample) = outcome.registry.inspect_sent(h, &inspector).map_err(failure)? {
                dump.push_str(&format!("# handle {}\n", h.id()));
                dump.push_str(&sample.payload(&inspector).dump());
            }
        }
        let mut states = path.clone().into_os_string();
        states.push(".states");
        write_file(Path::new(&states), &dump)?;
    }
    say_raw!("{}", to_json(&outcome.record));
    eprintln!("transcript written to {}", path.display());
    Ok(())
}

pub fn experiment(args: &ExperimentArgs) -> CliResult {
    let common = &args.common;
    let params = protocol_params(common, &args.protocol)?;
    if args.sessions == 0 {
        return Err(usage("--sessions must be at least 1"));
    }
    let config = ExperimentConfig::new(
        params,
        args.protocol.alice,
        args.protocol.bob,
        args.sessions,
        common.seed,
    )
    .with_parallelism(args.parallelism);
    let stats = run_experiment(&config).map_err(failure)?;
    let (ext, body) = match common.format {
        Format::Json => ("json", stats.to_json() + "\n"),
        Format::Csv => ("csv", stats.to_csv()),
    };
    let path = resolve_output(
        common,
        &format!(
            "experiment-{}-{}-{}.{ext}",
            args.protocol.alice, args.protocol.bob, common.seed
        ),
    );
    write_file(&path, &body)?;
    let report = stats.report();
    say!(
        "sessions {}  received {:.4} [{:.4}, {:.4}]  aborted {:.4} [{:.4}, {:.4}]",
        stats.sessions,
        report.received_rate.estimate,
        report.received_rate.ci_low,
        report.received_rate.ci_high,
        report.abort_rate.estimate,
        report.abort_rate.ci_low,
        report.abort_rate.ci_high,
    );
    eprintln!("statistics written to {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct PathRates {
    circuit: Rate,
    measurement: Rate,
}

#[derive(Serialize)]
struct DistinguishReport {
    n: usize,
    trials: u64,
    copies: usize,
    seed: u64,
    correct_key: PathRates,
    wrong_key: PathRates,
    /// Largest gap between circuit and measurement outcome probabilities.
    max_probability_gap: f64,
}

fn decode<R: Rng>(key: &Permutation, samples: &[QscdSample], circuit: bool, rng: &mut R) -> Result<u8, CliError> {
    let labels = samples
        .iter()
        .map(|s| {
            let label = if circuit {
                distinguish_circuit(key, s, rng)
            } else {
                measure_bit(key, s, rng)
            };
            label.map(|(l, _)| 1 - l)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(failure)?;
    Ok(majority(&labels).expect("at least one copy"))
}

pub fn distinguish(args: &DistinguishArgs) -> CliResult {
    let common = &args.common;
    validate_degree(common.n).map_err(usage)?;
    if args.trials == 0 || args.copies == 0 {
        return Err(usage("--trials and --copies must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let n = common.n;
    let mut hits = [0u64; 4];
    let mut gap: f64 = 0.0;
    for _ in 0..args.trials {
        let pi = Permutation::random_involution(&mut rng, n).map_err(failure)?;
        let wrong = loop {
            let k = Permutation::random_involution(&mut rng, n).map_err(failure)?;
            if k != pi {
                break k;
            }
        };
        let bit = rng.random_range(0..2u8);
        let samples = (0..args.copies)
            .map(|_| encode_bit(bit, &pi, &mut rng))
            .collect::<Result<Vec<_>, _>>()
            .map_err(failure)?;
        for (slot, (key, circuit)) in [(&pi, true), (&pi, false), (&wrong, true), (&wrong, false)]
            .into_iter()
            .enumerate()
        {
            hits[slot] += (decode(key, &samples, circuit, &mut rng)? == bit) as u64;
        }
        let payload = samples[0].payload(&Inspector::privileged());
        for key in [&pi, &wrong] {
            let c = circuit_branches(key, payload).map_err(failure)?;
            let m = measurement_branches(key, payload).map_err(failure)?;
            for (a, b) in c.iter().zip(m.iter()) {
                gap = gap.max((a.probability - b.probability).abs());
            }
        }
    }
    let rate = |k: u64| Rate::new(k, args.trials);
    let report = DistinguishReport {
        n,
        trials: args.trials,
        copies: args.copies,
        seed: common.seed,
        correct_key: PathRates {
            circuit: rate(hits[0]),
            measurement: rate(hits[1]),
        },
        wrong_key: PathRates {
            circuit: rate(hits[2]),
            measurement: rate(hits[3]),
        },
        max_probability_gap: gap,
    };
    for (key, rates) in [("correct", &report.correct_key), ("wrong", &report.wrong_key)] {
        for (path, r) in [("circuit", &rates.circuit), ("measurement", &rates.measurement)] {
            say!(
                "{key:<8}{path:<12}{:.4} [{:.4}, {:.4}]  {}/{}",
                r.estimate,
                r.ci_low,
                r.ci_high,
                r.successes,
                r.trials
            );
        }
    }
    say!("max circuit/measurement probability gap {gap:.1e}");
    if common.output.is_some() {
        let body = match common.format {
            Format::Json => to_json(&report),
            Format::Csv => {
                let mut s = String::from("key,path,successes,trials,estimate,ci_low,ci_high\n");
                for (key, rates) in [("correct", &report.correct_key), ("wrong", &report.wrong_key)] {
                    for (path, r) in [("circuit", &rates.circuit), ("measurement", &rates.measurement)] {
                        s.push_str(&format!(
                            "{key},{path},{},{},{},{},{}\n",
                            r.successes, r.trials, r.estimate, r.ci_low, r.ci_high
                        ));
                    }
                }
                s
            }
        };
        write_file(&resolve_output(common, "distinguish.json"), &body)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleReport {
    n: usize,
    key: Permutation,
    other: Option<Permutation>,
    checks: Vec<qot_core::qsim::oracle::OracleCheck>,
    passed: bool,
}

pub fn oracle(common: &Common) -> CliResult {
    let n = common.n;
    if n % 4 != 2 || n > MAX_ORACLE_DEGREE {
        return Err(usage(format!(
            "the dense oracle needs n = 2(2m+1) with n ≤ {MAX_ORACLE_DEGREE} (2 or 6), got {n}"
        )));
    }
    if common.format != Format::Json {
        return Err(usage("oracle reports are JSON only"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let keys = Permutation::all_involutions(n).map_err(failure)?;
    let key = keys[rng.random_range(0..keys.len())];
    let others: Vec<_> = keys.iter().filter(|k| **k != key).collect();
    let other = (!others.is_empty()).then(|| *others[rng.random_range(0..others.len())]);
    let checks = verify_identities(&key, other.as_ref()).map_err(failure)?;
    say!("key {key}");
    if let Some(o) = &other {
        say!("other key {o}");
    }
    for c in &checks {
        say!(
            "{} {:<48} max deviation {:.3e} (tolerance {:.0e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.deviation,
            c.tolerance
        );
    }
    let passed = checks.iter().all(|c| c.passed);
    let failed = checks.iter().filter(|c| !c.passed).count();
    if common.output.is_some() {
        let report = OracleReport {
            n,
            key,
            other,
            checks,
            passed,
        };
        write_file(&resolve_output(common, "oracle.json"), &to_json(&report))?;
    }
    if passed {
        Ok(())
    } else {
        Err(failure(format!("{failed} oracle identities failed")))
    }
}

#[derive(Serialize)]
struct Enumeration {
    n: usize,
    count: usize,
    involutions: Vec<String>,
}

pub fn enumerate_k(common: &Common) -> CliResult {
    let n = common.n;
    if n == 0 || n > MAX_ENUMERATE_DEGREE {
        return Err(usage(format!(
            "enumerate-k supports 1 ≤ n ≤ {MAX_ENUMERATE_DEGREE}, got {n}"
        )));
    }
    let all = Permutation::all_involutions(n).map_err(failure)?;
    let listing: Vec<String> = all.iter().map(|p| p.to_string()).collect();
    say!("{}", listing.len());
    for p in &listing {
        say!("{p}");
    }
    if common.output.is_some() {
        let body = match common.format {
            Format::Json => to_json(&Enumeration {
                n,
                count: listing.len(),
                involutions: listing,
            }),
            Format::Csv => std::iter::once("involution".to_string())
                .chain(listing)
                .map(|l| l + "\n")
                .collect(),
        };
        write_file(&resolve_output(common, "enumerate-k.json"), &body)?;
    }
    Ok(())
}
