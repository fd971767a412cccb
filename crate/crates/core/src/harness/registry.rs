//! Opaque quantum handles. Parties reach a sample only through operations
//! that a real holder of the system could perform; reading amplitudes needs
//! an [`Inspector`].

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permgroup::Permutation;
use crate::qscd::{self, Inspector, QscdSample};
use crate::qsim::PlusMinus;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Handle(u64);

impl Handle {
    pub fn id(self) -> u64 {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum RegistryEvent {
    Created {
        handle: Handle,
        owner: Party,
    },
    Transferred {
        handle: Handle,
        from: Party,
        to: Party,
    },
    SignConverted {
        handle: Handle,
        by: Party,
    },
    Measured {
        handle: Handle,
        by: Party,
        key: Permutation,
        outcome: PlusMinus,
    },
}

#[derive(Clone, Debug)]
struct Entry {
    owner: Party,
    sent: Option<QscdSample>,
    current: QscdSample,
}

/// Per-session store of quantum samples.
#[derive(Clone, Debug, Default)]
pub struct QuantumRegistry {
    next: u64,
    store: BTreeMap<Handle, Entry>,
    log: Vec<RegistryEvent>,
}

impl QuantumRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, owner: Party, sample: QscdSample) -> Handle {
        let handle = Handle(self.next);
        self.next += 1;
        self.store.insert(
            handle,
            Entry {
                owner,
                sent: None,
                current: sample,
            },
        );
        self.log.push(RegistryEvent::Created { handle, owner });
        handle
    }

    fn entry_mut(&mut self, handle: Handle, by: Party) -> Result<&mut Entry> {
        let entry = self.store.get_mut(&handle).ok_or(Error::UnknownHandle(handle.0))?;
        if entry.owner != by {
            return Err(Error::NotOwner {
                handle: handle.0,
                holder: entry.owner.to_string(),
                requester: by.to_string(),
            });
        }
        Ok(entry)
    }

    pub fn owner(&self, handle: Handle) -> Result<Party> {
        self.store
            .get(&handle)
            .map(|e| e.owner)
            .ok_or(Error::UnknownHandle(handle.0))
    }

    /// Hands the system to the other party. The first transfer freezes a
    /// copy of the sample as sent, for inspection.
    pub fn transfer(&mut self, handle: Handle, from: Party, to: Party) -> Result<()> {
        let entry = self.entry_mut(handle, from)?;
        entry.owner = to;
        if entry.sent.is_none() {
            entry.sent = Some(entry.current.clone());
        }
        self.log.push(RegistryEvent::Transferred { handle, from, to });
        Ok(())
    }

    pub fn convert_sign(&mut self, handle: Handle, by: Party) -> Result<()> {
        let entry = self.entry_mut(handle, by)?;
        entry.current = qscd::convert_sign(&entry.current)?;
        self.log.push(RegistryEvent::SignConverted { handle, by });
        Ok(())
    }

    /// Measures `M_key` in place; the stored sample collapses.
    pub fn measure_pm<R: Rng + ?Sized>(
        &mut self,
        handle: Handle,
        by: Party,
        key: &Permutation,
        rng: &mut R,
    ) -> Result<PlusMinus> {
        let entry = self.entry_mut(handle, by)?;
        let (outcome, post) = qscd::measure_pm(key, &entry.current, rng)?;
        entry.current = post;
        self.log.push(RegistryEvent::Measured {
            handle,
            by,
            key: *key,
            outcome,
        });
        Ok(outcome)
    }

    /// Measures every copy of one message bit and returns the decoded bit.
    pub fn decode_bit<R: Rng + ?Sized>(
        &mut self,
        handles: &[Handle],
        by: Party,
        key: &Permutation,
        rng: &mut R,
    ) -> Result<bool> {
        let mut bits = Vec::with_capacity(handles.len());
        for &h in handles {
            bits.push(qscd::decode_bit(self.measure_pm(h, by, key, rng)?));
        }
        qscd::majority(&bits)
            .map(|b| b == 1)
            .ok_or_else(|| Error::Protocol("bit with no copies".into()))
    }

    pub fn events(&self) -> &[RegistryEvent] {
        &self.log
    }

    pub fn handles(&self) -> impl Iterator<Item = Handle> + '_ {
        self.store.keys().copied()
    }

    pub fn inspect(&self, handle: Handle, _: &Inspector) -> Result<&QscdSample> {
        self.store
            .get(&handle)
            .map(|e| &e.current)
            .ok_or(Error::UnknownHandle(handle.0))
    }

    /// The sample as it was when first handed over, if it ever was.
    pub fn inspect_sent(&self, handle: Handle, _: &Inspector) -> Result<Option<&QscdSample>> {
        self.store
            .get(&handle)
            .map(|e| e.sent.as_ref())
            .ok_or(Error::UnknownHandle(handle.0))
    }
}
