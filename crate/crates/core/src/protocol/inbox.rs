//! Server-side store of the latest parameters received from each user in a
//! round, the delayed-update queue, and the end-of-round upload rules of
//! each scheme.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::ModelParams;

/// How late or lost final uploads are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Opportunistic-proactive: the latest intermediate stands in for a
    /// lost final.
    Opt,
    /// Lost finals are dropped.
    Discard,
    /// Lost finals arrive one round late and are staleness-weighted.
    Async,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "opt" => Ok(Self::Opt),
            "discard" => Ok(Self::Discard),
            "async" => Ok(Self::Async),
            other => Err(Error::invalid(format!("unknown scheme `{other}` (opt, discard, async)"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Opt => "opt",
            Self::Discard => "discard",
            Self::Async => "async",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntryKind {
    Intermediate,
    Final,
    StaleFinal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InboxEntry {
    pub user_id: usize,
    pub params: ModelParams,
    /// Local epoch at which the parameters were produced.
    pub epoch_tag: usize,
    pub round_tag: usize,
    pub kind: EntryKind,
}

/// At most one entry per user for the current round; a later reception
/// replaces an earlier one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ServerInbox {
    round: usize,
    slots: BTreeMap<usize, InboxEntry>,
}

impl ServerInbox {
    pub fn new(round: usize) -> Self {
        Self { round, slots: BTreeMap::new() }
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// Stores `entry`, overwriting any previous entry of the same user.
    ///
    /// Receptions arrive in epoch order, so the stored epoch tag never
    /// decreases; an out-of-order older deposit is ignored.
    pub fn deposit(&mut self, entry: InboxEntry) {
        debug_assert_eq!(entry.round_tag, self.round, "deposit for a different round");
        match self.slots.get(&entry.user_id) {
            Some(prev) if (prev.epoch_tag, prev.kind) > (entry.epoch_tag, entry.kind) => {}
            _ => {
                self.slots.insert(entry.user_id, entry);
            }
        }
    }

    pub fn remove(&mut self, user_id: usize) -> Option<InboxEntry> {
        self.slots.remove(&user_id)
    }

    pub fn get(&self, user_id: usize) -> Option<&InboxEntry> {
        self.slots.get(&user_id)
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Moves every slot of `other` (same round) into `self`.
    pub fn merge(&mut self, other: ServerInbox) {
        for (_, e) in other.slots {
            self.deposit(e);
        }
    }

    fn drain(&mut self, next_round: usize) -> Vec<InboxEntry> {
        self.round = next_round;
        std::mem::take(&mut self.slots).into_values().collect()
    }
}

/// A final upload that missed its round and is waiting for a later one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaleUpdate {
    pub user_id: usize,
    pub params: ModelParams,
    pub round_tag: usize,
    /// Bits that will cross the link when the update arrives.
    pub bits: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StaleQueue {
    pending: Vec<StaleUpdate>,
}

impl StaleQueue {
    pub fn push(&mut self, update: StaleUpdate) {
        self.pending.push(update);
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn extend(&mut self, other: StaleQueue) {
        self.pending.extend(other.pending);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FinalOutcome {
    Delivered,
    /// Final lost; an intermediate from this round stays in the inbox.
    IntermediateKept,
    Lost,
    /// Final deferred to the next round.
    Queued,
}

/// End-of-round upload of `params` (epoch `epoch_tag`) by `user_id`.
#[allow(clippy::too_many_arguments)]
pub fn final_upload(
    user_id: usize,
    params: &ModelParams,
    epoch_tag: usize,
    bits: u64,
    inbox: &mut ServerInbox,
    stale_queue: &mut StaleQueue,
    interrupted: bool,
    scheme: Scheme,
) -> FinalOutcome {
    let round = inbox.round();
    if !interrupted {
        inbox.deposit(InboxEntry {
            user_id,
            params: params.clone(),
            epoch_tag,
            round_tag: round,
            kind: EntryKind::Final,
        });
        return FinalOutcome::Delivered;
    }
    match scheme {
        Scheme::Opt => {
            if inbox.get(user_id).is_some() {
                FinalOutcome::IntermediateKept
            } else {
                FinalOutcome::Lost
            }
        }
        Scheme::Discard => {
            inbox.remove(user_id);
            FinalOutcome::Lost
        }
        Scheme::Async => {
            inbox.remove(user_id);
            stale_queue.push(StaleUpdate { user_id, params: params.clone(), round_tag: round, bits });
            FinalOutcome::Queued
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Collected {
    /// Current-round entries (final or intermediate), by user id.
    pub timely: Vec<InboxEntry>,
    /// Delayed finals arriving now, with their delay in rounds.
    pub stale: Vec<(StaleUpdate, u32)>,
}

impl Collected {
    /// Nothing to aggregate: the caller keeps the global model.
    pub fn is_empty(&self) -> bool {
        self.timely.is_empty() && self.stale.is_empty()
    }
}

/// Empties the inbox for the next round and gathers aggregation inputs.
///
/// Delayed finals are released only under [`Scheme::Async`] and only once
/// their round has ended; updates older than `max_delay` are dropped.
pub fn collect_for_aggregation(
    inbox: &mut ServerInbox,
    stale_queue: &mut StaleQueue,
    scheme: Scheme,
    max_delay: u32,
) -> Collected {
    let round = inbox.round();
    let timely = inbox.drain(round + 1);
    let mut stale = Vec::new();
    if scheme == Scheme::Async {
        let mut keep = Vec::new();
        for s in std::mem::take(&mut stale_queue.pending) {
            if s.round_tag >= round {
                keep.push(s);
                continue;
            }
            let delay = (round - s.round_tag) as u32;
            if delay <= max_delay {
                stale.push((s, delay));
            }
        }
        stale_queue.pending = keep;
        stale.sort_by_key(|(s, _)| (s.round_tag, s.user_id));
    } else {
        stale_queue.pending.clear();
    }
    Collected { timely, stale }
}
