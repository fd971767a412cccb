//! Simulated two-party environment: quantum registry, classical channel,
//! transcripts, the session driver and Monte Carlo aggregation.

mod channel;
mod experiment;
mod inspect;
mod registry;
mod session;
mod stats;
mod transcript;

use serde::{Deserialize, Serialize};

pub use channel::{Channel, Envelope, JsonLinesReader, JsonLinesWriter, Message};
pub use experiment::{run_experiment, run_records, ExperimentConfig};
pub use inspect::{ensemble_check, inspector_verify, EnsembleGroup, InspectionReport};
pub use registry::{Handle, Party, QuantumRegistry, RegistryEvent};
pub use session::{run_session, KeyChoice, SessionOptions, SessionOutcome, SessionRecord};
pub use stats::{wilson_interval, ExperimentStats, Rate, StatsReport};
pub use transcript::{Event, EventBody, SessionTranscript, Visibility, TRANSCRIPT_VERSION};

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
const ALICE_TAG: u64 = u64::from_be_bytes(*b"alice\0\0\0");
const BOB_TAG: u64 = u64::from_be_bytes(*b"bob\0\0\0\0\0");

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeds of one session. Role streams are `ChaCha8Rng::seed_from_u64` of
/// the role seeds.
///
/// Derivation: `session = mix64(base + (index + 1)·0x9e3779b97f4a7c15)`
/// (element `index` of the SplitMix64 sequence started at `base`), then
/// `alice = mix64(session ^ "alice\0\0\0")` and `bob = mix64(session ^
/// "bob\0\0\0\0\0")` with the tags read as big-endian `u64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SessionSeeds {
    pub session_id: u64,
    pub session: u64,
    pub alice: u64,
    pub bob: u64,
}

impl SessionSeeds {
    pub fn derive(base_seed: u64, index: u64) -> Self {
        let session = mix64(base_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)));
        Self {
            session_id: index,
            session,
            alice: mix64(session ^ ALICE_TAG),
            bob: mix64(session ^ BOB_TAG),
        }
    }
}
