//! `qot`: run oblivious-transfer sessions, Monte Carlo experiments and the
//! verification suites from the command line.
//!
//! Exit codes: 0 success, 1 oracle identity failure or runtime error, 2 usage
//! error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qot_core::{AliceStrategy, BobStrategy};

#[derive(Parser, Debug)]
#[command(name = "qot", version, about = "Quantum oblivious transfer simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one session and write its JSON-lines transcript.
    Session(SessionArgs),
    /// Run many sessions and write aggregate statistics.
    Experiment(ExperimentArgs),
    /// Trapdoor versus wrong-key distinguishing trials.
    Distinguish(DistinguishArgs),
    /// Dense density-matrix identity checks (n ≤ 7).
    Oracle(Common),
    /// List every fixed-point-free involution of degree n (n ≤ 10).
    EnumerateK(Common),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Permutation degree; protocol commands need n = 2(2m+1) with m ≥ 1.
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file. Relative paths are resolved against --output-dir.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, env = "QOT_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug, Clone)]
struct ProtocolArgs {
    /// Message length ℓ.
    #[arg(long, default_value_t = 32)]
    ell: usize,
    #[arg(long, default_value_t = 3.0)]
    threshold_sigmas: f64,
    /// Systems sent per message bit.
    #[arg(long, default_value_t = 1)]
    copies: usize,
    /// honest, invariant-cheat or mixed-cheat.
    #[arg(long, default_value = "honest")]
    alice: AliceStrategy,
    /// honest or premeasure.
    #[arg(long, default_value = "honest")]
    bob: BobStrategy,
}

#[derive(Args, Debug)]
struct SessionArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Also write the transmitted states, one dump per handle.
    #[arg(long)]
    dump_states: bool,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[arg(long, default_value_t = 10_000)]
    sessions: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    parallelism: usize,
}

#[derive(Args, Debug)]
struct DistinguishArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, visible_alias = "sessions", default_value_t = 10_000)]
    trials: u64,
    /// Copies per encoded bit, decoded by majority.
    #[arg(long, default_value_t = 1)]
    copies: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Session(a) => commands::session(&a),
        Command::Experiment(a) => commands::experiment(&a),
        Command::Distinguish(a) => commands::distinguish(&a),
        Command::Oracle(a) => commands::oracle(&a),
        Command::EnumerateK(a) => commands::enumerate_k(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qot: {e}");
            ExitCode::from(e.code())
        }
    }
}
