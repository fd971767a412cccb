//! One protocol run, driven step by step over the in-process channel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::channel::{Channel, Message};
use super::registry::{Party, QuantumRegistry, RegistryEvent};
use super::transcript::{EventBody, SessionTranscript, Visibility};
use super::SessionSeeds;
use crate::error::{Error, Result};
use crate::hashing::BitString;
use crate::permgroup::Permutation;
use crate::protocol::{
    alice_respond, alice_transfer, alice_transfer_with_key, bob_challenge, bob_open, bob_resolve_with_side,
    cheating_alice_invariant, cheating_alice_mixed, cheating_bob_premeasure, AliceState, AliceStrategy, BobStrategy,
    Premeasurement, ProtocolParams, Side, Terminal, TransferMessage, Verdict,
};

/// Key a premeasuring Bob is handed instead of guessing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyChoice {
    Correct,
    Wrong,
}

/// Test and inspection overrides. The default runs the protocol as written.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SessionOptions {
    /// Replaces Bob's Step-6 coin. The coin is still drawn, so both values
    /// leave Bob's random stream in the same place.
    pub bob_side: Option<Side>,
    /// Alice's key for an honest transfer.
    pub alice_key: Option<Permutation>,
    /// Alice's message; drawn from her stream otherwise.
    pub message: Option<BitString>,
    pub premeasure_key: Option<KeyChoice>,
}

/// Per-session summary, with ground truth that only the harness knows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: u64,
    pub strategy_alice: AliceStrategy,
    pub strategy_bob: BobStrategy,
    pub seeds: SessionSeeds,
    pub terminal: Terminal,
    pub gamma_equals_pi: bool,
    pub gamma_in_k: Option<bool>,
    pub bob_received: bool,
    pub aborted: bool,
    pub bob_aborted_cheat: bool,
    pub hamming_d: Option<usize>,
    /// Hash matched although `m̃ ≠ m`.
    pub hash_collision: bool,
    pub correct_bits: usize,
    pub decoded_bits: usize,
    pub premeasure_success: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct SessionOutcome {
    pub record: SessionRecord,
    pub verdict: Verdict,
    pub transcript: SessionTranscript,
    pub registry: QuantumRegistry,
    pub pi: Option<Permutation>,
    pub gamma: Option<Permutation>,
    pub message: Option<BitString>,
    pub transfer: Option<TransferMessage>,
    pub premeasurement: Option<Premeasurement>,
}

struct Driver {
    transcript: SessionTranscript,
    registry: QuantumRegistry,
    channel: Channel,
    logged: usize,
}

impl Driver {
    fn send(&mut self, from: Party, message: Message) -> Result<()> {
        let payload = serde_json::to_value(&message).map_err(|e| Error::Channel(e.to_string()))?;
        let step = message.step();
        let name = message.name().to_string();
        let envelope = self.channel.send(from, message);
        self.transcript.push(
            step,
            Visibility::Public,
            EventBody::Message {
                from: envelope.from,
                to: envelope.to,
                name,
                payload,
            },
        );
        Ok(())
    }

    /// Moves new registry measurements into the transcript.
    fn log_measurements(&mut self, purpose_of: impl Fn(&Permutation) -> (u8, &'static str)) {
        for event in &self.registry.events()[self.logged..] {
            if let RegistryEvent::Measured {
                handle,
                by,
                key,
                outcome,
            } = event
            {
                let (step, purpose) = purpose_of(key);
                let visibility = match by {
                    Party::Alice => Visibility::Alice,
                    Party::Bob => Visibility::Bob,
                };
                self.transcript.push(
                    step,
                    visibility,
                    EventBody::Measurement {
                        party: *by,
                        handle: *handle,
                        key: *key,
                        outcome: *outcome,
                        purpose: purpose.to_string(),
                    },
                );
            }
        }
        self.logged = self.registry.events().len();
    }
}

/// Runs Steps 1–9 with the given strategies. Only invalid parameters are
/// errors; misbehaviour during the run ends in an aborted verdict.
pub fn run_session(
    params: &ProtocolParams,
    alice: AliceStrategy,
    bob: BobStrategy,
    seeds: SessionSeeds,
    options: &SessionOptions,
) -> Result<SessionOutcome> {
    params.validate()?;
    if let Some(m) = &options.message {
        if m.len() != params.ell {
            return Err(Error::LengthMismatch {
                expected: params.ell,
                actual: m.len(),
            });
        }
    }
    let mut alice_rng = ChaCha8Rng::seed_from_u64(seeds.alice);
    let mut bob_rng = ChaCha8Rng::seed_from_u64(seeds.bob);
    let mut d = Driver {
        transcript: SessionTranscript::new(),
        registry: QuantumRegistry::new(),
        channel: Channel::new(),
        logged: 0,
    };
    d.transcript.push(
        0,
        Visibility::Public,
        EventBody::SessionStart {
            session_id: seeds.session_id,
            params: *params,
        },
    );
    d.transcript.push(
        0,
        Visibility::Inspector,
        EventBody::Setup {
            strategy_alice: alice,
            strategy_bob: bob,
            seeds,
        },
    );

    let mut pi = None;
    let mut gamma = None;
    let mut transfer = None;
    let mut premeasurement = None;
    let mut message = None;
    let mut alice_state: Option<AliceState> = None;

    let result = (|| -> Result<Verdict> {
        // Steps 1–3
        let m = match &options.message {
            Some(m) => m.clone(),
            None => BitString::random(&mut alice_rng, params.ell),
        };
        let (t, state) = match alice {
            AliceStrategy::Honest => match &options.alice_key {
                Some(key) => alice_transfer_with_key(params, &m, key, &mut d.registry, &mut alice_rng)?,
                None => alice_transfer(params, &m, &mut d.registry, &mut alice_rng)?,
            },
            AliceStrategy::InvariantCheat => cheating_alice_invariant(params, &m, &mut d.registry, &mut alice_rng)?,
            AliceStrategy::MixedCheat => cheating_alice_mixed(params, &mut d.registry, &mut alice_rng)?,
        };
        pi = Some(*state.key());
        message = Some(state.message().clone());
        d.transcript.local(1, Party::Alice, "pi", state.key());
        d.transcript.local(2, Party::Alice, "m", state.message());
        for &h in &t.handles {
            d.registry.transfer(h, Party::Alice, Party::Bob)?;
        }
        d.transcript.push(
            3,
            Visibility::Public,
            EventBody::HandleTransfer {
                from: Party::Alice,
                to: Party::Bob,
                handles: t.handles.clone(),
            },
        );
        d.send(Party::Alice, Message::Transfer(t))?;
        let t = match d.channel.recv(Party::Bob)? {
            Message::Transfer(t) => t,
            other => return Err(Error::Protocol(format!("expected transfer, got {}", other.name()))),
        };
        transfer = Some(t.clone());
        alice_state = Some(state);

        if bob == BobStrategy::Premeasure {
            let forced = match options.premeasure_key {
                None => None,
                Some(KeyChoice::Correct) => pi,
                Some(KeyChoice::Wrong) => {
                    let truth = pi.expect("set above");
                    Some(loop {
                        let k = Permutation::random_involution(&mut bob_rng, params.n)?;
                        if k != truth {
                            break k;
                        }
                    })
                }
            };
            let p = cheating_bob_premeasure(params, &t, &mut d.registry, forced.as_ref(), &mut bob_rng)?;
            d.log_measurements(|_| (3, "premeasure"));
            d.transcript.local(3, Party::Bob, "premeasurement", &p);
            premeasurement = Some(p);
        }

        // Step 4
        let (mut bob_state, tau) = bob_challenge(params, &mut bob_rng)?;
        d.transcript.local(4, Party::Bob, "tau", tau);
        d.send(Party::Bob, Message::Challenge { tau })?;

        // Step 5
        let tau_seen = match d.channel.recv(Party::Alice)? {
            Message::Challenge { tau } => tau,
            other => return Err(Error::Protocol(format!("expected challenge, got {}", other.name()))),
        };
        let state = alice_state.as_mut().expect("set above");
        let delta = alice_respond(state, &tau_seen, &mut alice_rng)?;
        d.transcript.local(5, Party::Alice, "side", state.side());
        d.send(Party::Alice, Message::Response { delta })?;

        // Step 6
        let delta_seen = match d.channel.recv(Party::Bob)? {
            Message::Response { delta } => delta,
            other => return Err(Error::Protocol(format!("expected response, got {}", other.name()))),
        };
        let coin = Side::random(&mut bob_rng);
        let side = options.bob_side.unwrap_or(coin);
        let g = match bob_resolve_with_side(&mut bob_state, &delta_seen, side) {
            Ok(g) => g,
            Err(Error::MalformedDelta(reason)) => {
                return Ok(Verdict::failed(Terminal::MalformedDelta, reason));
            }
            Err(e) => return Err(e),
        };
        gamma = Some(g);
        d.transcript.local(6, Party::Bob, "side", side);
        d.transcript.local(6, Party::Bob, "gamma", g);

        // Steps 7–9
        let verdict = bob_open(&mut bob_state, &t, &mut d.registry, &mut bob_rng);
        d.log_measurements(|key| if *key == g { (7, "decode") } else { (9, "recheck") });
        Ok(verdict)
    })();

    let mut verdict = result.unwrap_or_else(|e| Verdict::failed(Terminal::ProtocolViolation, e.to_string()));
    verdict.alice_guess_received = alice_state.as_ref().and_then(|s| s.guess_received());
    d.transcript.push(
        9,
        Visibility::Bob,
        EventBody::Verdict {
            verdict: verdict.clone(),
        },
    );

    let (correct_bits, decoded_bits) = match (&verdict.m_tilde, &message) {
        (Some(mt), Some(m)) => (mt.len() - mt.hamming(m).unwrap_or(mt.len()), mt.len()),
        _ => (0, 0),
    };
    let hash_collision = verdict.bob_received && verdict.m_tilde.as_ref() != message.as_ref();
    let record = SessionRecord {
        session_id: seeds.session_id,
        strategy_alice: alice,
        strategy_bob: bob,
        seeds,
        terminal: verdict.terminal,
        gamma_equals_pi: gamma.is_some() && gamma == pi,
        gamma_in_k: gamma.map(|g| g.is_fixed_point_free_involution()),
        bob_received: verdict.bob_received,
        aborted: verdict.aborted(),
        bob_aborted_cheat: verdict.bob_aborted_cheat,
        hamming_d: verdict.hamming_d,
        hash_collision,
        correct_bits,
        decoded_bits,
        premeasure_success: premeasurement.as_ref().map(|p| p.success),
    };
    Ok(SessionOutcome {
        record,
        verdict,
        transcript: d.transcript,
        registry: d.registry,
        pi,
        gamma,
        message,
        transfer,
        premeasurement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qscd::Inspector;

    fn params() -> ProtocolParams {
        ProtocolParams::new(6, 32).unwrap()
    }

    fn run(alice: AliceStrategy, bob: BobStrategy, index: u64, options: &SessionOptions) -> SessionOutcome {
        run_session(&params(), alice, bob, SessionSeeds::derive(99, index), options).unwrap()
    }

    #[test]
    fn same_seeds_same_transcript() {
        for i in 0..5 {
            let a = run(
                AliceStrategy::Honest,
                BobStrategy::Honest,
                i,
                &SessionOptions::default(),
            );
            let b = run(
                AliceStrategy::Honest,
                BobStrategy::Honest,
                i,
                &SessionOptions::default(),
            );
            assert_eq!(a.transcript.to_jsonl(), b.transcript.to_jsonl());
            assert_eq!(a.record, b.record);
        }
    }

    #[test]
    fn transcript_seeds_replay_the_session() {
        let a = run(
            AliceStrategy::Honest,
            BobStrategy::Premeasure,
            3,
            &SessionOptions::default(),
        );
        let parsed = SessionTranscript::from_jsonl(&a.transcript.to_jsonl()).unwrap();
        let (params, alice, bob, seeds) = match (&parsed.events()[0].body, &parsed.events()[1].body) {
            (
                EventBody::SessionStart { params, .. },
                EventBody::Setup {
                    strategy_alice,
                    strategy_bob,
                    seeds,
                },
            ) => (*params, *strategy_alice, *strategy_bob, *seeds),
            other => panic!("unexpected header {other:?}"),
        };
        let b = run_session(&params, alice, bob, seeds, &SessionOptions::default()).unwrap();
        assert_eq!(a.transcript.to_jsonl(), b.transcript.to_jsonl());
    }

    #[test]
    fn events_follow_step_order() {
        for i in 0..20 {
            let o = run(
                AliceStrategy::Honest,
                BobStrategy::Premeasure,
                i,
                &SessionOptions::default(),
            );
            let steps: Vec<u8> = o.transcript.events().iter().map(|e| e.step).collect();
            assert!(steps.windows(2).all(|w| w[0] <= w[1]), "{steps:?}");
            let last = o.transcript.events().last().unwrap();
            assert!(matches!(last.body, EventBody::Verdict { .. }));
        }
    }

    #[test]
    fn received_iff_gamma_is_pi() {
        for i in 0..100 {
            let o = run(
                AliceStrategy::Honest,
                BobStrategy::Honest,
                i,
                &SessionOptions::default(),
            );
            let r = &o.record;
            assert_eq!(r.gamma_in_k, Some(true));
            assert!(r.bob_received == r.gamma_equals_pi || r.hash_collision);
            if r.gamma_equals_pi {
                assert_eq!(r.correct_bits, 32);
            }
        }
    }

    #[test]
    fn forced_bob_side_controls_gamma() {
        for i in 0..20 {
            let right = run(
                AliceStrategy::Honest,
                BobStrategy::Honest,
                i,
                &SessionOptions {
                    bob_side: Some(Side::Right),
                    ..Default::default()
                },
            );
            let left = run(
                AliceStrategy::Honest,
                BobStrategy::Honest,
                i,
                &SessionOptions {
                    bob_side: Some(Side::Left),
                    ..Default::default()
                },
            );
            // both hit π when τ commutes with π
            assert!(right.record.gamma_equals_pi || left.record.gamma_equals_pi);
            if right.gamma != left.gamma {
                assert_ne!(right.record.gamma_equals_pi, left.record.gamma_equals_pi);
            }
            assert_eq!(right.transcript.alice_view(), left.transcript.alice_view());
            assert_ne!(right.transcript.bob_view(), left.transcript.bob_view());
        }
    }

    #[test]
    fn alice_view_hides_bob_state() {
        let o = run(
            AliceStrategy::Honest,
            BobStrategy::Honest,
            0,
            &SessionOptions::default(),
        );
        let view = o.transcript.alice_view();
        assert!(!view.contains("verdict"));
        assert!(!view.contains("gamma"));
        assert!(!view.contains("measurement"));
        assert!(!view.contains("seeds"));
        assert!(view.contains(r#""name":"challenge""#));
        assert!(view.contains(r#""name":"pi""#));
    }

    #[test]
    fn handles_leave_alice_for_good() {
        let mut o = run(
            AliceStrategy::Honest,
            BobStrategy::Honest,
            1,
            &SessionOptions::default(),
        );
        let h = o.transfer.as_ref().unwrap().handles[0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pi = o.pi.unwrap();
        assert!(matches!(
            o.registry.measure_pm(h, Party::Alice, &pi, &mut rng),
            Err(Error::NotOwner { .. })
        ));
        assert!(o.registry.transfer(h, Party::Alice, Party::Bob).is_err());
    }

    #[test]
    fn invariant_cheat_is_always_caught() {
        for i in 0..30 {
            let o = run(
                AliceStrategy::InvariantCheat,
                BobStrategy::Honest,
                i,
                &SessionOptions::default(),
            );
            assert!(o.record.bob_received);
            assert!(o.record.aborted);
            assert_eq!(o.record.hamming_d, Some(0));
            assert_eq!(o.verdict.alice_guess_received, Some(true));
        }
    }

    #[test]
    fn premeasure_with_true_key() {
        let options = SessionOptions {
            premeasure_key: Some(KeyChoice::Correct),
            ..Default::default()
        };
        for i in 0..20 {
            let o = run(AliceStrategy::Honest, BobStrategy::Premeasure, i, &options);
            assert_eq!(o.record.premeasure_success, Some(true));
            assert_eq!(o.premeasurement.as_ref().unwrap().guess, *o.message.as_ref().unwrap());
        }
    }

    #[test]
    fn fixed_message_and_key() {
        let pi = Permutation::parse_cycles(6, "(1 4)(2 5)(3 6)").unwrap();
        let m = BitString::from_bits(vec![true; 32]);
        let o = run(
            AliceStrategy::Honest,
            BobStrategy::Honest,
            0,
            &SessionOptions {
                alice_key: Some(pi),
                message: Some(m.clone()),
                ..Default::default()
            },
        );
        assert_eq!(o.pi, Some(pi));
        assert_eq!(o.message, Some(m));
        assert!(crate::harness::inspector_verify(&o, &Inspector::privileged()).is_clean());
        let bad = SessionOptions {
            message: Some(BitString::zeros(5)),
            ..Default::default()
        };
        assert!(run_session(
            &params(),
            AliceStrategy::Honest,
            BobStrategy::Honest,
            SessionSeeds::derive(0, 0),
            &bad
        )
        .is_err());
    }
}
