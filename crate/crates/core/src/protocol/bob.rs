use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Phase, ProtocolParams, Side, Terminal, TransferMessage, Verdict};
use crate::error::{Error, Result};
use crate::harness::{Party, QuantumRegistry};
use crate::hashing::{hash, BitString};
use crate::permgroup::Permutation;

#[derive(Clone, Debug)]
pub struct BobState {
    params: ProtocolParams,
    phase: Phase,
    tau: Permutation,
    side: Option<Side>,
    gamma: Option<Permutation>,
}

impl BobState {
    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn tau(&self) -> &Permutation {
        &self.tau
    }

    pub fn side(&self) -> Side {
        self.side.expect("Bob has not resolved yet")
    }

    pub fn gamma(&self) -> &Permutation {
        self.gamma.as_ref().expect("Bob has not resolved yet")
    }
}

/// Step 4: a uniform `τ ∈ S_n`.
pub fn bob_challenge<R: Rng + ?Sized>(params: &ProtocolParams, rng: &mut R) -> Result<(BobState, Permutation)> {
    params.validate()?;
    let tau = Permutation::random(rng, params.n)?;
    let state = BobState {
        params: *params,
        phase: Phase::Opening,
        tau,
        side: None,
        gamma: None,
    };
    Ok((state, tau))
}

/// `(δ∘τ⁻¹, τ⁻¹∘δ)`.
pub fn resolve_candidates(delta: &Permutation, tau: &Permutation) -> Result<(Permutation, Permutation)> {
    let inv = tau.inverse();
    Ok((delta.compose(&inv)?, inv.compose(delta)?))
}

/// Step 6 on a fair coin.
pub fn bob_resolve<R: Rng + ?Sized>(state: &mut BobState, delta: &Permutation, rng: &mut R) -> Result<Permutation> {
    let side = Side::random(rng);
    bob_resolve_with_side(state, delta, side)
}

/// Step 6 with the side fixed. Fails with [`Error::MalformedDelta`] unless
/// both candidates lie in `K_n`.
pub fn bob_resolve_with_side(state: &mut BobState, delta: &Permutation, side: Side) -> Result<Permutation> {
    if state.phase != Phase::Opening || state.gamma.is_some() {
        return Err(Error::Protocol("Bob resolves once, in the opening phase".into()));
    }
    let (right, left) = resolve_candidates(delta, &state.tau)?;
    if !right.is_fixed_point_free_involution() || !left.is_fixed_point_free_involution() {
        state.phase = Phase::Done;
        return Err(Error::MalformedDelta(delta.to_string()));
    }
    let gamma = match side {
        Side::Right => right,
        Side::Left => left,
    };
    state.side = Some(side);
    state.gamma = Some(gamma);
    Ok(gamma)
}

/// Acceptance window of Step 9: `|d − ℓ/2| ≤ t·√(ℓ/4)`.
pub fn step9_accepts(params: &ProtocolParams, d: usize) -> bool {
    (d as f64 - params.ell as f64 / 2.0).abs() <= params.step9_tolerance()
}

fn check_transfer(params: &ProtocolParams, transfer: &TransferMessage) -> Result<()> {
    if transfer.handles.len() != params.ell * params.copies {
        return Err(Error::Protocol(format!(
            "expected {} quantum systems, received {}",
            params.ell * params.copies,
            transfer.handles.len()
        )));
    }
    if transfer.spec.ell != params.ell || transfer.y.len() != params.ell / 2 {
        return Err(Error::Protocol(
            "hash description does not match the message length".into(),
        ));
    }
    Ok(())
}

fn decode_all<R: Rng + ?Sized>(
    params: &ProtocolParams,
    transfer: &TransferMessage,
    registry: &mut QuantumRegistry,
    key: &Permutation,
    rng: &mut R,
) -> Result<BitString> {
    (0..params.ell)
        .map(|i| registry.decode_bit(transfer.bit_handles(params, i), Party::Bob, key, rng))
        .collect::<Result<Vec<_>>>()
        .map(BitString::from_bits)
}

/// Steps 7–9. Every failure becomes a verdict.
pub fn bob_open<R: Rng + ?Sized>(
    state: &mut BobState,
    transfer: &TransferMessage,
    registry: &mut QuantumRegistry,
    rng: &mut R,
) -> Verdict {
    match open_inner(state, transfer, registry, rng) {
        Ok(v) => v,
        Err(e) => Verdict::failed(Terminal::ProtocolViolation, e.to_string()),
    }
}

fn open_inner<R: Rng + ?Sized>(
    state: &mut BobState,
    transfer: &TransferMessage,
    registry: &mut QuantumRegistry,
    rng: &mut R,
) -> Result<Verdict> {
    let params = state.params;
    let gamma = state
        .gamma
        .ok_or_else(|| Error::Protocol("Bob opens before resolving γ".into()))?;
    state.phase = Phase::Done;
    check_transfer(&params, transfer)?;

    let m_tilde = decode_all(&params, transfer, registry, &gamma, rng)?;
    if hash(&transfer.spec, &m_tilde)? != transfer.y {
        return Ok(Verdict {
            terminal: Terminal::HashMismatch,
            bob_received: false,
            bob_aborted_cheat: false,
            m_tilde: Some(m_tilde),
            hamming_d: None,
            step9_key: None,
            alice_guess_received: None,
            reason: None,
        });
    }

    let other = loop {
        let k = Permutation::random_involution(rng, params.n)?;
        if k != gamma {
            break k;
        }
    };
    let r = decode_all(&params, transfer, registry, &other, rng)?;
    let d = r.hamming(&m_tilde)?;
    let accepted = step9_accepts(&params, d);
    Ok(Verdict {
        terminal: if accepted {
            Terminal::Accepted
        } else {
            Terminal::CheatDetected
        },
        bob_received: true,
        bob_aborted_cheat: !accepted,
        m_tilde: Some(m_tilde),
        hamming_d: Some(d),
        step9_key: Some(other),
        alice_guess_received: None,
        reason: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Premeasurement {
    pub key: Permutation,
    pub guess: BitString,
    pub success: bool,
}

/// Bob measures everything under a guessed key before the opening phase and
/// checks his guess against `y`. `key` overrides the guess.
pub fn cheating_bob_premeasure<R: Rng + ?Sized>(
    params: &ProtocolParams,
    transfer: &TransferMessage,
    registry: &mut QuantumRegistry,
    key: Option<&Permutation>,
    rng: &mut R,
) -> Result<Premeasurement> {
    check_transfer(params, transfer)?;
    let key = match key {
        Some(k) => *k,
        None => Permutation::random_involution(rng, params.n)?,
    };
    let guess = decode_all(params, transfer, registry, &key, rng)?;
    let success = hash(&transfer.spec, &guess)? == transfer.y;
    Ok(Premeasurement { key, guess, success })
}
