//! Two-party oblivious transfer over the `ρ^±_π` ensembles.
//!
//! Transfer phase: Alice draws `π ∈ K_n`, sends one sample per message bit
//! and `y = h(m)`. Opening phase: Bob sends `τ`, Alice answers with
//! `δ = π∘τ` or `τ∘π`, and Bob strips `τ` from one side. With probability 1/2
//! his side matches hers and `γ = π`; otherwise `γ` is a conjugate of `π`
//! and his measurement results are noise. The hash tells Bob which case he
//! is in, and a second measurement under a fresh key catches states that
//! decode identically under every key.

mod alice;
mod bob;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::Handle;
use crate::hashing::{BitString, HashSpec};
use crate::permgroup::Permutation;

pub use alice::{
    alice_respond, alice_transfer, alice_transfer_with_key, cheating_alice_invariant, cheating_alice_mixed, AliceState,
    MAX_INVARIANT_DEGREE,
};
pub use bob::{
    bob_challenge, bob_open, bob_resolve, bob_resolve_with_side, cheating_bob_premeasure, resolve_candidates,
    step9_accepts, BobState, Premeasurement,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub n: usize,
    pub ell: usize,
    pub threshold_sigmas: f64,
    pub copies: usize,
}

impl ProtocolParams {
    pub const DEFAULT_THRESHOLD_SIGMAS: f64 = 3.0;

    pub fn new(n: usize, ell: usize) -> Result<Self> {
        let params = Self {
            n,
            ell,
            threshold_sigmas: Self::DEFAULT_THRESHOLD_SIGMAS,
            copies: 1,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_threshold(mut self, sigmas: f64) -> Result<Self> {
        self.threshold_sigmas = sigmas;
        self.validate()?;
        Ok(self)
    }

    pub fn with_copies(mut self, copies: usize) -> Result<Self> {
        self.copies = copies;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        validate_degree(self.n)?;
        if self.ell < 8 || !self.ell.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "message length must be even and at least 8, got {}",
                self.ell
            )));
        }
        if !(self.threshold_sigmas.is_finite() && self.threshold_sigmas > 0.0) {
            return Err(Error::InvalidParams(format!(
                "threshold must be a positive number of standard deviations, got {}",
                self.threshold_sigmas
            )));
        }
        if self.copies == 0 {
            return Err(Error::InvalidParams("copies per bit must be at least 1".into()));
        }
        Ok(())
    }

    /// Step-9 window half-width `t·√(ℓ/4)`.
    pub fn step9_tolerance(&self) -> f64 {
        self.threshold_sigmas * (self.ell as f64 / 4.0).sqrt()
    }
}

/// Checks `n = 2(2m+1)` with `m ≥ 1`.
pub fn validate_degree(n: usize) -> Result<()> {
    if n < 6 || n % 4 != 2 {
        return Err(Error::InvalidParams(format!(
            "n must have the form 2(2m+1) with m >= 1 (6, 10, 14, ...), got {n}"
        )));
    }
    if n > crate::permgroup::MAX_DEGREE {
        return Err(Error::DegreeOutOfRange(n));
    }
    Ok(())
}

/// Which side a party composes `τ` on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

impl Side {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random::<bool>() {
            Side::Right
        } else {
            Side::Left
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Right => "right",
            Side::Left => "left",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Transfer,
    Opening,
    Done,
}

/// What Alice hands over at the end of the transfer phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferMessage {
    pub handles: Vec<Handle>,
    pub y: BitString,
    pub spec: HashSpec,
}

impl TransferMessage {
    /// Handles carrying bit `i`.
    pub fn bit_handles(&self, params: &ProtocolParams, i: usize) -> &[Handle] {
        &self.handles[i * params.copies..(i + 1) * params.copies]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    Accepted,
    HashMismatch,
    CheatDetected,
    MalformedDelta,
    ProtocolViolation,
}

/// Bob's outcome. `bob_received` means the hash check passed; Step 9 may
/// still abort afterwards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub terminal: Terminal,
    pub bob_received: bool,
    pub bob_aborted_cheat: bool,
    pub m_tilde: Option<BitString>,
    pub hamming_d: Option<usize>,
    pub step9_key: Option<Permutation>,
    pub alice_guess_received: Option<bool>,
    pub reason: Option<String>,
}

impl Verdict {
    pub(crate) fn failed(terminal: Terminal, reason: String) -> Self {
        Self {
            terminal,
            bob_received: false,
            bob_aborted_cheat: false,
            m_tilde: None,
            hamming_d: None,
            step9_key: None,
            alice_guess_received: None,
            reason: Some(reason),
        }
    }

    pub fn aborted(&self) -> bool {
        matches!(
            self.terminal,
            Terminal::CheatDetected | Terminal::MalformedDelta | Terminal::ProtocolViolation
        )
    }

    /// Bob ends up holding `m̃` and keeps it.
    pub fn accepted(&self) -> bool {
        self.terminal == Terminal::Accepted
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AliceStrategy {
    Honest,
    InvariantCheat,
    MixedCheat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BobStrategy {
    Honest,
    Premeasure,
}

impl AliceStrategy {
    pub fn name(self) -> &'static str {
        match self {
            AliceStrategy::Honest => "honest",
            AliceStrategy::InvariantCheat => "invariant-cheat",
            AliceStrategy::MixedCheat => "mixed-cheat",
        }
    }
}

impl BobStrategy {
    pub fn name(self) -> &'static str {
        match self {
            BobStrategy::Honest => "honest",
            BobStrategy::Premeasure => "premeasure",
        }
    }
}

impl fmt::Display for AliceStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for BobStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AliceStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "honest" => Ok(AliceStrategy::Honest),
            "invariant-cheat" => Ok(AliceStrategy::InvariantCheat),
            "mixed-cheat" => Ok(AliceStrategy::MixedCheat),
            _ => Err(Error::InvalidParams(format!("unknown Alice strategy {s:?}"))),
        }
    }
}

impl std::str::FromStr for BobStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "honest" => Ok(BobStrategy::Honest),
            "premeasure" => Ok(BobStrategy::Premeasure),
            _ => Err(Error::InvalidParams(format!("unknown Bob strategy {s:?}"))),
        }
    }
}
