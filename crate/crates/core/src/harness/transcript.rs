//! Ordered session record, serialized as JSON lines.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::registry::{Handle, Party};
use super::SessionSeeds;
use crate::error::{Error, Result};
use crate::permgroup::Permutation;
use crate::protocol::{AliceStrategy, BobStrategy, ProtocolParams, Verdict};
use crate::qsim::PlusMinus;

pub const TRANSCRIPT_VERSION: u32 = 1;

/// Who may see an event. `Public` events crossed the channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Public,
    Alice,
    Bob,
    Inspector,
}

impl Visibility {
    pub fn visible_to(self, party: Party) -> bool {
        matches!(
            (self, party),
            (Visibility::Public, _) | (Visibility::Alice, Party::Alice) | (Visibility::Bob, Party::Bob)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventBody {
    SessionStart {
        session_id: u64,
        params: ProtocolParams,
    },
    Setup {
        strategy_alice: AliceStrategy,
        strategy_bob: BobStrategy,
        seeds: SessionSeeds,
    },
    Local {
        party: Party,
        name: String,
        value: Value,
    },
    Message {
        from: Party,
        to: Party,
        name: String,
        payload: Value,
    },
    HandleTransfer {
        from: Party,
        to: Party,
        handles: Vec<Handle>,
    },
    Measurement {
        party: Party,
        handle: Handle,
        key: Permutation,
        outcome: PlusMinus,
        purpose: String,
    },
    Verdict {
        verdict: Verdict,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub v: u32,
    pub seq: u64,
    pub step: u8,
    pub visibility: Visibility,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SessionTranscript {
    events: Vec<Event>,
}

impl SessionTranscript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, step: u8, visibility: Visibility, body: EventBody) {
        let seq = self.events.len() as u64;
        self.events.push(Event {
            v: TRANSCRIPT_VERSION,
            seq,
            step,
            visibility,
            body,
        });
    }

    pub fn local(&mut self, step: u8, party: Party, name: &str, value: impl Serialize) {
        let visibility = match party {
            Party::Alice => Visibility::Alice,
            Party::Bob => Visibility::Bob,
        };
        let value = serde_json::to_value(value).expect("transcript values serialize");
        self.push(
            step,
            visibility,
            EventBody::Local {
                party,
                name: name.to_string(),
                value,
            },
        );
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    fn lines<'a>(events: impl Iterator<Item = &'a Event>) -> String {
        let mut out = String::new();
        for e in events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn to_jsonl(&self) -> String {
        Self::lines(self.events.iter())
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let events = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let e: Event = serde_json::from_str(l).map_err(|err| Error::Parse {
                    input: l.to_string(),
                    reason: err.to_string(),
                })?;
                if e.v != TRANSCRIPT_VERSION {
                    return Err(Error::Parse {
                        input: l.to_string(),
                        reason: format!("unsupported transcript version {}", e.v),
                    });
                }
                Ok(e)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { events })
    }

    /// The events `party` can see, as JSON lines. Sequence numbers are those
    /// of the full transcript.
    pub fn view(&self, party: Party) -> String {
        Self::lines(self.events.iter().filter(|e| e.visibility.visible_to(party)))
    }

    pub fn alice_view(&self) -> String {
        self.view(Party::Alice)
    }

    pub fn bob_view(&self) -> String {
        self.view(Party::Bob)
    }
}
