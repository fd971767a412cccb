//! Integer counters over sessions, with Wilson intervals derived on output.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::session::SessionRecord;
use crate::error::{Error, Result};
use crate::protocol::{AliceStrategy, BobStrategy, ProtocolParams, Terminal};

const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95% confidence. `(0, 1)` for no trials.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Rate {
    pub fn new(successes: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, trials);
        let estimate = if trials == 0 {
            0.0
        } else {
            successes as f64 / trials as f64
        };
        Self {
            successes,
            trials,
            estimate,
            ci_low,
            ci_high,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentStats {
    pub strategy_alice: AliceStrategy,
    pub strategy_bob: BobStrategy,
    pub params: ProtocolParams,
    pub base_seed: u64,
    pub sessions: u64,
    pub accepted: u64,
    pub hash_mismatch: u64,
    pub cheat_detected: u64,
    pub malformed_delta: u64,
    pub protocol_violation: u64,
    pub received: u64,
    pub gamma_equals_pi: u64,
    /// Sessions where `bob_received` and `γ = π` disagree.
    pub received_mismatch: u64,
    /// `γ = π`, the hash matched, and Step 9 aborted anyway.
    pub aborted_with_correct_key: u64,
    pub hash_collisions: u64,
    pub correct_bits: u64,
    pub decoded_bits: u64,
    pub premeasure_attempts: u64,
    pub premeasure_successes: u64,
}

impl ExperimentStats {
    pub fn new(params: ProtocolParams, alice: AliceStrategy, bob: BobStrategy, base_seed: u64) -> Self {
        Self {
            strategy_alice: alice,
            strategy_bob: bob,
            params,
            base_seed,
            sessions: 0,
            accepted: 0,
            hash_mismatch: 0,
            cheat_detected: 0,
            malformed_delta: 0,
            protocol_violation: 0,
            received: 0,
            gamma_equals_pi: 0,
            received_mismatch: 0,
            aborted_with_correct_key: 0,
            hash_collisions: 0,
            correct_bits: 0,
            decoded_bits: 0,
            premeasure_attempts: 0,
            premeasure_successes: 0,
        }
    }

    pub fn add(&mut self, r: &SessionRecord) {
        self.sessions += 1;
        match r.terminal {
            Terminal::Accepted => self.accepted += 1,
            Terminal::HashMismatch => self.hash_mismatch += 1,
            Terminal::CheatDetected => self.cheat_detected += 1,
            Terminal::MalformedDelta => self.malformed_delta += 1,
            Terminal::ProtocolViolation => self.protocol_violation += 1,
        }
        self.received += r.bob_received as u64;
        self.gamma_equals_pi += r.gamma_equals_pi as u64;
        self.received_mismatch += (r.bob_received != r.gamma_equals_pi) as u64;
        self.aborted_with_correct_key += (r.gamma_equals_pi && r.bob_aborted_cheat) as u64;
        self.hash_collisions += r.hash_collision as u64;
        self.correct_bits += r.correct_bits as u64;
        self.decoded_bits += r.decoded_bits as u64;
        if let Some(success) = r.premeasure_success {
            self.premeasure_attempts += 1;
            self.premeasure_successes += success as u64;
        }
    }

    pub fn aborted(&self) -> u64 {
        self.cheat_detected + self.malformed_delta + self.protocol_violation
    }

    /// Combines disjoint sets of sessions from the same configuration.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.strategy_alice != other.strategy_alice
            || self.strategy_bob != other.strategy_bob
            || self.params != other.params
            || self.base_seed != other.base_seed
        {
            return Err(Error::InvalidParams(
                "cannot merge stats of different experiments".into(),
            ));
        }
        let mut out = self.clone();
        out.sessions += other.sessions;
        out.accepted += other.accepted;
        out.hash_mismatch += other.hash_mismatch;
        out.cheat_detected += other.cheat_detected;
        out.malformed_delta += other.malformed_delta;
        out.protocol_violation += other.protocol_violation;
        out.received += other.received;
        out.gamma_equals_pi += other.gamma_equals_pi;
        out.received_mismatch += other.received_mismatch;
        out.aborted_with_correct_key += other.aborted_with_correct_key;
        out.hash_collisions += other.hash_collisions;
        out.correct_bits += other.correct_bits;
        out.decoded_bits += other.decoded_bits;
        out.premeasure_attempts += other.premeasure_attempts;
        out.premeasure_successes += other.premeasure_successes;
        Ok(out)
    }

    pub fn report(&self) -> StatsReport {
        StatsReport {
            counters: self.clone(),
            received_rate: Rate::new(self.received, self.sessions),
            abort_rate: Rate::new(self.aborted(), self.sessions),
            gamma_equals_pi_rate: Rate::new(self.gamma_equals_pi, self.sessions),
            correct_key_abort_rate: Rate::new(self.aborted_with_correct_key, self.gamma_equals_pi),
            bit_accuracy: Rate::new(self.correct_bits, self.decoded_bits),
            premeasure_success_rate: Rate::new(self.premeasure_successes, self.premeasure_attempts),
            expected_collisions_bound: self.sessions as f64 * 0.5f64.powi((self.params.ell / 2) as i32),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.report()).expect("stats serialize")
    }

    /// Header and one row.
    pub fn to_csv(&self) -> String {
        let r = self.report();
        let mut out = String::from(
            "strategy_alice,strategy_bob,n,ell,threshold_sigmas,copies,base_seed,sessions,received,accepted,\
hash_mismatch,cheat_detected,malformed_delta,protocol_violation,gamma_equals_pi,received_mismatch,\
aborted_with_correct_key,hash_collisions,correct_bits,decoded_bits,premeasure_attempts,premeasure_successes,\
received_rate,received_ci_low,received_ci_high,abort_rate,abort_ci_low,abort_ci_high,\
bit_accuracy,bit_accuracy_ci_low,bit_accuracy_ci_high\n",
        );
        let c = &r.counters;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.strategy_alice,
            c.strategy_bob,
            c.params.n,
            c.params.ell,
            c.params.threshold_sigmas,
            c.params.copies,
            c.base_seed,
            c.sessions,
            c.received,
            c.accepted,
            c.hash_mismatch,
            c.cheat_detected,
            c.malformed_delta,
            c.protocol_violation,
            c.gamma_equals_pi,
            c.received_mismatch,
            c.aborted_with_correct_key,
            c.hash_collisions,
            c.correct_bits,
            c.decoded_bits,
            c.premeasure_attempts,
            c.premeasure_successes,
            r.received_rate.estimate,
            r.received_rate.ci_low,
            r.received_rate.ci_high,
            r.abort_rate.estimate,
            r.abort_rate.ci_low,
            r.abort_rate.ci_high,
            r.bit_accuracy.estimate,
            r.bit_accuracy.ci_low,
            r.bit_accuracy.ci_high,
        );
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub counters: ExperimentStats,
    pub received_rate: Rate,
    pub abort_rate: Rate,
    pub gamma_equals_pi_rate: Rate,
    pub correct_key_abort_rate: Rate,
    pub bit_accuracy: Rate,
    pub premeasure_success_rate: Rate,
    /// `N·2^{−ℓ/2}`.
    pub expected_collisions_bound: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::SessionSeeds;
    use proptest::prelude::*;

    fn record(i: u64, terminal: Terminal, gamma_ok: bool) -> SessionRecord {
        SessionRecord {
            session_id: i,
            strategy_alice: AliceStrategy::Honest,
            strategy_bob: BobStrategy::Honest,
            seeds: SessionSeeds::derive(0, i),
            terminal,
            gamma_equals_pi: gamma_ok,
            gamma_in_k: Some(true),
            bob_received: matches!(terminal, Terminal::Accepted | Terminal::CheatDetected),
            aborted: matches!(terminal, Terminal::CheatDetected),
            bob_aborted_cheat: terminal == Terminal::CheatDetected,
            hamming_d: None,
            hash_collision: false,
            correct_bits: if gamma_ok { 8 } else { 4 },
            decoded_bits: 8,
            premeasure_success: None,
        }
    }

    fn terminal_of(k: u8) -> Terminal {
        [
            Terminal::Accepted,
            Terminal::HashMismatch,
            Terminal::CheatDetected,
            Terminal::MalformedDelta,
            Terminal::ProtocolViolation,
        ][k as usize % 5]
    }

    fn stats_of(records: &[SessionRecord]) -> ExperimentStats {
        let mut s = ExperimentStats::new(
            ProtocolParams::new(6, 8).unwrap(),
            AliceStrategy::Honest,
            BobStrategy::Honest,
            1,
        );
        for r in records {
            s.add(r);
        }
        s
    }

    #[test]
    fn wilson_reference_values() {
        // 50/100: 0.5 ± 0.0945
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.403_831_7).abs() < 1e-6, "{lo}");
        assert!((hi - 0.596_168_3).abs() < 1e-6, "{hi}");
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.277_532_4).abs() < 1e-6, "{hi}");
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    }

    #[test]
    fn csv_has_header_and_one_row() {
        let s = stats_of(&[record(0, Terminal::Accepted, true)]);
        let csv = s.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
        assert!(lines[1].starts_with("honest,honest,6,8,3,1,1,1,1,1,"));
    }

    #[test]
    fn merge_rejects_other_configs() {
        let a = stats_of(&[]);
        let mut b = stats_of(&[]);
        b.base_seed = 2;
        assert!(a.merge(&b).is_err());
    }

    proptest! {
        #[test]
        fn counters_sum_to_sessions(spec in proptest::collection::vec((0u8..5, any::<bool>()), 0..60)) {
            let records: Vec<_> = spec.iter().enumerate().map(|(i, &(t, g))| record(i as u64, terminal_of(t), g)).collect();
            let s = stats_of(&records);
            prop_assert_eq!(s.accepted + s.hash_mismatch + s.aborted(), s.sessions);
            let r = s.report();
            for rate in [r.received_rate, r.abort_rate, r.bit_accuracy] {
                prop_assert!(rate.ci_low <= rate.estimate + 1e-12 && rate.estimate <= rate.ci_high + 1e-12);
            }
        }

        #[test]
        fn merge_is_associative(spec in proptest::collection::vec((0u8..5, any::<bool>()), 0..60), a in 0usize..60, b in 0usize..60) {
            let records: Vec<_> = spec.iter().enumerate().map(|(i, &(t, g))| record(i as u64, terminal_of(t), g)).collect();
            let (a, b) = (a.min(records.len()), b.min(records.len()));
            let (a, b) = (a.min(b), a.max(b));
            let x = stats_of(&records[..a]);
            let y = stats_of(&records[a..b]);
            let z = stats_of(&records[b..]);
            let left = x.merge(&y).unwrap().merge(&z).unwrap();
            let right = x.merge(&y.merge(&z).unwrap()).unwrap();
            prop_assert_eq!(&left, &right);
            prop_assert_eq!(&left, &stats_of(&records));
        }
    }
}
