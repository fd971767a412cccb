//! Classical messages between the parties. The in-process [`Channel`] is what
//! sessions use; [`JsonLinesWriter`] and [`JsonLinesReader`] carry the same
//! envelopes over any byte stream, one JSON object per line. Quantum handles
//! travel as plain ids and stay meaningful only against the sender's
//! registry.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::registry::Party;
use crate::error::{Error, Result};
use crate::permgroup::Permutation;
use crate::protocol::TransferMessage;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Transfer(TransferMessage),
    Challenge { tau: Permutation },
    Response { delta: Permutation },
}

impl Message {
    pub fn name(&self) -> &'static str {
        match self {
            Message::Transfer(_) => "transfer",
            Message::Challenge { .. } => "challenge",
            Message::Response { .. } => "response",
        }
    }

    /// Protocol step the message belongs to.
    pub fn step(&self) -> u8 {
        match self {
            Message::Transfer(_) => 3,
            Message::Challenge { .. } => 4,
            Message::Response { .. } => 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub from: Party,
    pub to: Party,
    pub message: Message,
}

/// Synchronous duplex queue.
#[derive(Clone, Debug, Default)]
pub struct Channel {
    to_alice: VecDeque<Message>,
    to_bob: VecDeque<Message>,
}

impl Channel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn send(&mut self, from: Party, message: Message) -> Envelope {
        let to = match from {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        };
        let queue = match to {
            Party::Alice => &mut self.to_alice,
            Party::Bob => &mut self.to_bob,
        };
        queue.push_back(message.clone());
        Envelope { from, to, message }
    }

    pub fn recv(&mut self, to: Party) -> Result<Message> {
        let queue = match to {
            Party::Alice => &mut self.to_alice,
            Party::Bob => &mut self.to_bob,
        };
        queue
            .pop_front()
            .ok_or_else(|| Error::Channel(format!("no message waiting for {to}")))
    }

    pub fn is_idle(&self) -> bool {
        self.to_alice.is_empty() && self.to_bob.is_empty()
    }
}

pub struct JsonLinesWriter<W: Write> {
    inner: W,
}

impl<W: Write> JsonLinesWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn send(&mut self, envelope: &Envelope) -> Result<()> {
        let line = serde_json::to_string(envelope).map_err(|e| Error::Channel(e.to_string()))?;
        writeln!(self.inner, "{line}").map_err(|e| Error::Channel(e.to_string()))?;
        self.inner.flush().map_err(|e| Error::Channel(e.to_string()))
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

pub struct JsonLinesReader<R: BufRead> {
    inner: R,
    line: String,
}

impl<R: BufRead> JsonLinesReader<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            line: String::new(),
        }
    }

    /// Next envelope, or `None` at end of stream. Blank lines are skipped.
    pub fn recv(&mut self) -> Result<Option<Envelope>> {
        loop {
            self.line.clear();
            let read = self
                .inner
                .read_line(&mut self.line)
                .map_err(|e| Error::Channel(e.to_string()))?;
            if read == 0 {
                return Ok(None);
            }
            let trimmed = self.line.trim();
            if trimmed.is_empty() {
                continue;
            }
            return serde_json::from_str(trimmed)
                .map(Some)
                .map_err(|e| Error::Channel(format!("bad line {trimmed:?}: {e}")));
        }
    }
}
