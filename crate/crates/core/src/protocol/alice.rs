use rand::Rng;

use super::{AliceStrategy, Phase, ProtocolParams, Side, TransferMessage};
use crate::error::{Error, Result};
use crate::harness::{Handle, Party, QuantumRegistry};
use crate::hashing::{hash, sample_hash, BitString, HashSpec};
use crate::permgroup::Permutation;
use crate::qscd::{encode_bit, QscdSample};
use crate::qsim::{RegisterId, RegisterLayout, SparseState};

/// Largest degree for which the invariant-state attack is simulated.
pub const MAX_INVARIANT_DEGREE: usize = 7;

#[derive(Clone, Debug)]
pub struct AliceState {
    strategy: AliceStrategy,
    phase: Phase,
    pi: Permutation,
    m: BitString,
    y: BitString,
    spec: HashSpec,
    side: Option<Side>,
    delta: Option<Permutation>,
}

impl AliceState {
    pub fn strategy(&self) -> AliceStrategy {
        self.strategy
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn key(&self) -> &Permutation {
        &self.pi
    }

    /// The message Alice committed to with `y`.
    pub fn message(&self) -> &BitString {
        &self.m
    }

    pub fn y(&self) -> &BitString {
        &self.y
    }

    pub fn spec(&self) -> &HashSpec {
        &self.spec
    }

    pub fn side(&self) -> Side {
        self.side.expect("Alice has not responded yet")
    }

    pub fn delta(&self) -> &Permutation {
        self.delta.as_ref().expect("Alice has not responded yet")
    }

    /// What a cheating Alice believes about Bob's result.
    pub fn guess_received(&self) -> Option<bool> {
        match self.strategy {
            AliceStrategy::Honest => None,
            AliceStrategy::InvariantCheat => Some(true),
            AliceStrategy::MixedCheat => Some(false),
        }
    }
}

fn check_message(params: &ProtocolParams, m: &BitString) -> Result<()> {
    params.validate()?;
    if m.len() != params.ell {
        return Err(Error::LengthMismatch {
            expected: params.ell,
            actual: m.len(),
        });
    }
    Ok(())
}

fn finish<R: Rng + ?Sized>(
    strategy: AliceStrategy,
    params: &ProtocolParams,
    pi: Permutation,
    m: BitString,
    handles: Vec<Handle>,
    rng: &mut R,
) -> Result<(TransferMessage, AliceState)> {
    let spec = sample_hash(params.ell, rng)?;
    let y = hash(&spec, &m)?;
    let state = AliceState {
        strategy,
        phase: Phase::Opening,
        pi,
        m,
        y: y.clone(),
        spec: spec.clone(),
        side: None,
        delta: None,
    };
    Ok((TransferMessage { handles, y, spec }, state))
}

/// Steps 1–3: draws `π ← K_n`, encodes `m` and commits to it with `y = h(m)`.
/// The returned handles are still owned by Alice.
pub fn alice_transfer<R: Rng + ?Sized>(
    params: &ProtocolParams,
    m: &BitString,
    registry: &mut QuantumRegistry,
    rng: &mut R,
) -> Result<(TransferMessage, AliceState)> {
    check_message(params, m)?;
    let pi = Permutation::random_involution(rng, params.n)?;
    alice_transfer_with_key(params, m, &pi, registry, rng)
}

/// [`alice_transfer`] with a caller-chosen key.
pub fn alice_transfer_with_key<R: Rng + ?Sized>(
    params: &ProtocolParams,
    m: &BitString,
    pi: &Permutation,
    registry: &mut QuantumRegistry,
    rng: &mut R,
) -> Result<(TransferMessage, AliceState)> {
    check_message(params, m)?;
    if pi.degree() != params.n || !pi.is_fixed_point_free_involution() {
        return Err(Error::NotInvolution(pi.to_string()));
    }
    let mut handles = Vec::with_capacity(params.ell * params.copies);
    for &bit in m.bits() {
        for _ in 0..params.copies {
            handles.push(registry.insert(Party::Alice, encode_bit(bit as u8, pi, rng)?));
        }
    }
    finish(AliceStrategy::Honest, params, *pi, m.clone(), handles, rng)
}

/// Sends simultaneous eigenvectors of every `R_γ`: the uniform superposition
/// for `1` and its sign-twisted version for `0`. Every key decodes `m`.
pub fn cheating_alice_invariant<R: Rng + ?Sized>(
    params: &ProtocolParams,
    m: &BitString,
    registry: &mut QuantumRegistry,
    rng: &mut R,
) -> Result<(TransferMessage, AliceState)> {
    check_message(params, m)?;
    if params.n > MAX_INVARIANT_DEGREE {
        return Err(Error::InvalidParams(format!(
            "the invariant-state attack needs n! amplitudes per bit; n <= {MAX_INVARIANT_DEGREE} supported, got {}",
            params.n
        )));
    }
    let pi = Permutation::random_involution(rng, params.n)?;
    let plus = SparseState::uniform_superposition(params.n)?;
    let minus = plus.c_sgn(RegisterId(0))?;
    let mut handles = Vec::with_capacity(params.ell * params.copies);
    for &bit in m.bits() {
        let state = if bit { &plus } else { &minus };
        for _ in 0..params.copies {
            handles.push(registry.insert(Party::Alice, QscdSample::from_payload(state.clone())?));
        }
    }
    finish(AliceStrategy::InvariantCheat, params, pi, m.clone(), handles, rng)
}

/// Sends uniformly random basis states, an unraveling of the maximally
/// mixed state, with `y` the hash of an unrelated random string.
pub fn cheating_alice_mixed<R: Rng + ?Sized>(
    params: &ProtocolParams,
    registry: &mut QuantumRegistry,
    rng: &mut R,
) -> Result<(TransferMessage, AliceState)> {
    params.validate()?;
    let pi = Permutation::random_involution(rng, params.n)?;
    let mut handles = Vec::with_capacity(params.ell * params.copies);
    for _ in 0..params.ell * params.copies {
        let sigma = Permutation::random(rng, params.n)?;
        let state = SparseState::basis(RegisterLayout::single(params.n)?, 0, &[sigma])?;
        handles.push(registry.insert(Party::Alice, QscdSample::from_payload(state)?));
    }
    let decoy = BitString::random(rng, params.ell);
    finish(AliceStrategy::MixedCheat, params, pi, decoy, handles, rng)
}

/// Step 5: `δ = π∘τ` (right) or `τ∘π` (left) on a fair coin.
pub fn alice_respond<R: Rng + ?Sized>(state: &mut AliceState, tau: &Permutation, rng: &mut R) -> Result<Permutation> {
    if state.phase != Phase::Opening {
        return Err(Error::Protocol("Alice responds once, in the opening phase".into()));
    }
    let side = Side::random(rng);
    let delta = match side {
        Side::Right => state.pi.compose(tau)?,
        Side::Left => tau.compose(&state.pi)?,
    };
    state.side = Some(side);
    state.delta = Some(delta);
    state.phase = Phase::Done;
    Ok(delta)
}
