//! Exact simulation of quantum oblivious transfer built on the
//! distinguishability of the `ρ^+_π` and `ρ^-_π` state ensembles over the
//! symmetric group.
//!
//! Layers, bottom up: [`permgroup`] (permutations and `K_n`), [`qsim`]
//! (sparse states over `S_n` with a dense oracle for small `n`), [`qscd`]
//! (state preparation and trapdoor measurement), [`hashing`] (Toeplitz
//! universal hashing), [`protocol`] (the two parties and adversaries) and
//! [`harness`] (registry, channel, transcripts, Monte Carlo runner).

pub mod error;
pub mod harness;
pub mod hashing;
pub mod permgroup;
pub mod protocol;
pub mod qscd;
pub mod qsim;

pub use error::{Error, Result};
pub use harness::{
    run_experiment, run_session, ExperimentConfig, ExperimentStats, Party, SessionOptions, SessionOutcome,
    SessionRecord, SessionSeeds, SessionTranscript,
};
pub use hashing::{BitString, HashSpec};
pub use permgroup::{PermIndex, Permutation};
pub use protocol::{AliceStrategy, BobStrategy, ProtocolParams, Side, Terminal, Verdict};
pub use qscd::{Inspector, QscdSample};
pub use qsim::{PlusMinus, SparseState};
